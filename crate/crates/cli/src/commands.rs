use std::fmt::Write as _;

use serde_json::json;

use qrspace::correlations::{self, CorrelationOptions, Method, OffsetVector};
use qrspace::delta::{self, mobius_coefficients};
use qrspace::modulus::factor::is_prime;
use qrspace::modulus::PrimePower;
use qrspace::parse::{parse_box, parse_modulus, parse_offsets};
use qrspace::spacings::{self, SpacingMode};
use qrspace::truncation::{self, DefaultPolicy, IdentityPolicy, TruncationPolicy};
use qrspace::verify::{self, Suite, VerifyOptions};
use qrspace::{exact, residues, Error};

use crate::output::Output;
use crate::{Command, Failure, Global, EXIT_VERIFY};

/// Largest full `Δ`/`ε` table printed by `delta` without `--h`.
const MAX_DELTA_TABLE: u128 = 1_000_000;

type Run = std::result::Result<Output, Failure>;

pub fn run(cmd: &Command, g: &Global) -> Run {
    match cmd {
        Command::Factor { modulus } => factor(modulus),
        Command::Squares { modulus, list } => squares(modulus, *list, g),
        Command::Spacings {
            modulus,
            linear,
            bins,
            max_y,
        } => spacings_cmd(modulus, *linear, *bins, *max_y, g),
        Command::Davenport { prime, max_gap } => davenport(*prime, *max_gap),
        Command::Correlate {
            modulus,
            r,
            region,
            method,
            per_h,
        } => correlate(modulus, *r, region, method, *per_h, g),
        Command::Delta { prime, r, h } => delta_cmd(*prime, *r, h.as_deref()),
        Command::Lambda { r } => lambda(*r),
        Command::Hensel { prime, a, b, r } => hensel(*prime, *a, *b, *r),
        Command::Truncate {
            modulus,
            policy,
            gap,
            r,
            region,
        } => truncate(modulus, policy, *gap, *r, region.as_deref()),
        Command::Appendix {
            modulus,
            k_const,
            alpha,
            beta,
        } => appendix(modulus, *k_const, *alpha, *beta),
        Command::Verify {
            suite,
            inject_fault,
        } => verify_cmd(suite, *inject_fault, g),
    }
}

fn factor(spec: &str) -> Run {
    let m = parse_modulus(spec)?;
    let rows: Vec<Vec<String>> = m
        .factors()
        .iter()
        .map(|pk| vec![pk.p.to_string(), pk.alpha.to_string()])
        .collect();
    let result = json!({
        "canonical": m.to_string(),
        "value": m.value().to_string(),
        "factors": m.factors().iter().map(|pk| json!({"p": pk.p.to_string(), "alpha": pk.alpha})).collect::<Vec<_>>(),
        "rad": m.rad().to_string(),
        "omega": m.omega(),
        "squarefree": m.is_squarefree(),
    });
    Ok(Output::new("factor", result)
        .modulus(&m)
        .params(json!({ "input": spec }))
        .table(&["p", "alpha"], rows)
        .text(format!("{} = {}\n", m.value(), m)))
}

fn squares(spec: &str, list: bool, g: &Global) -> Run {
    let m = parse_modulus(spec)?;
    let n = residues::count_squares(&m);
    let s = residues::mean_spacing(&m);
    let elements = if list {
        Some(residues::enumerate_squares_capped(&m, g.max_residues)?.elements().to_vec())
    } else {
        None
    };
    let mut out = Output::new(
        "squares",
        json!({
            "n_q": n.to_string(),
            "s": exact::format(&s),
            "s_f64": exact::to_f64(&s),
            "squares": elements,
        }),
    )
    .modulus(&m)
    .params(json!({ "list": list }));
    let mut text = format!("N_Q = {n}\ns = Q/N_Q = {} ({:.6})\n", exact::format(&s), exact::to_f64(&s));
    out = match &elements {
        Some(e) => {
            let _ = writeln!(
                text,
                "{}",
                e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
            );
            out.table(&["residue"], e.iter().map(|x| vec![*x]).collect())
        }
        None => out.table(
            &["modulus", "n_q", "s"],
            vec![vec![m.to_string(), n.to_string(), exact::format(&s)]],
        ),
    };
    Ok(out.text(text))
}

fn spacings_cmd(spec: &str, linear: bool, bins: usize, max_y: f64, g: &Global) -> Run {
    let m = parse_modulus(spec)?;
    let mode = if linear {
        SpacingMode::Linear
    } else {
        SpacingMode::Circular
    };
    let x = residues::enumerate_squares_capped(&m, g.max_residues)?;
    let sum = spacings::spacing_summary(&x, mode, bins, max_y)?;
    let rows = sum.histogram.rows();
    let mut text = format!(
        "{} gaps, scale {} ({:.6}), mean normalized gap {:.6}, KS distance to Exp(1) {:.6}\n",
        sum.gaps.len(),
        exact::format(&sum.scale),
        exact::to_f64(&sum.scale),
        sum.mean_normalized(),
        sum.ks_distance
    );
    for (lo, hi, c, d) in &rows {
        let _ = writeln!(text, "[{lo:.3}, {hi:.3})  {c:>10}  {d:.6}");
    }
    let _ = writeln!(text, "beyond {max_y}: {}", sum.histogram.overflow);
    let result = json!({
        "mode": sum.mode,
        "scale": exact::format(&sum.scale),
        "gaps": sum.gaps.len(),
        "mean_normalized": sum.mean_normalized(),
        "ks_distance": sum.ks_distance,
        "histogram": rows.iter().map(|(lo, hi, c, d)| json!({"bin_lo": lo, "bin_hi": hi, "count": c, "density": d})).collect::<Vec<_>>(),
        "overflow": sum.histogram.overflow,
    });
    Ok(Output::new("spacings", result)
        .modulus(&m)
        .params(json!({ "linear": linear, "bins": bins, "max": max_y }))
        .table(
            &["bin_lo", "bin_hi", "count", "density"],
            rows.iter()
                .map(|(lo, hi, c, d)| vec![lo.to_string(), hi.to_string(), c.to_string(), d.to_string()])
                .collect(),
        )
        .text(text))
}

fn davenport(p: u64, max_gap: u64) -> Run {
    let t = spacings::davenport_distribution(p, max_gap)?;
    let mut text = format!("p = {p}: {} gaps\n", t.total_gaps);
    for row in &t.rows {
        let _ = writeln!(
            text,
            "gap {:>3}: {:>8}  freq {:.6}  2^-g {:.6}",
            row.gap, row.count, row.frequency, row.expected
        );
    }
    let _ = writeln!(text, "longer: {}", t.beyond);
    let rows = t
        .rows
        .iter()
        .map(|r| {
            vec![
                r.gap.to_string(),
                r.count.to_string(),
                r.frequency.to_string(),
                r.expected.to_string(),
            ]
        })
        .collect();
    Ok(Output::new("davenport", &t)
        .modulus(p)
        .params(json!({ "prime": p, "max_gap": max_gap }))
        .table(&["gap", "count", "frequency", "expected"], rows)
        .text(text))
}

fn correlate(spec: &str, r: usize, region: &str, method: &str, per_h: bool, g: &Global) -> Run {
    let m = parse_modulus(spec)?;
    let c = parse_box(region, r)?;
    let method: Method = method.parse()?;
    let opts = CorrelationOptions {
        method,
        per_h,
        max_h_points: g.max_h_points,
        max_residues: g.max_residues,
    };
    let res = correlations::r_correlation_with(&c, &m, &opts)?;
    let text = format!(
        "R_{r} = {} ({:.8})\ns = {}, vol(C) = {}, integer points in sC: {}\n",
        exact::format(&res.value),
        res.value_f64,
        exact::format(&res.s),
        exact::format(&res.volume),
        res.num_h
    );
    let mut out = Output::new("correlate", &res)
        .modulus(&m)
        .params(json!({ "r": r, "box": region, "method": method, "per_h": per_h }))
        .text(text);
    out = match &res.per_h {
        Some(rows) => {
            let mut header: Vec<String> = (1..r).map(|i| format!("h{i}")).collect();
            header.push("n".into());
            let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            out.table(
                &header,
                rows.iter()
                    .map(|row| {
                        let mut v: Vec<String> = row.h.iter().map(|x| x.to_string()).collect();
                        v.push(row.n.to_string());
                        v
                    })
                    .collect(),
            )
        }
        None => out.table(
            &["r", "s", "volume", "R", "num_h"],
            vec![vec![
                r.to_string(),
                exact::format(&res.s),
                exact::format(&res.volume),
                res.value_f64.to_string(),
                res.num_h.to_string(),
            ]],
        ),
    };
    Ok(out)
}

fn require_prime(p: u64) -> Result<(), Failure> {
    if p < 2 || !is_prime(p as u128) {
        return Err(Error::CompositeBase(p as u128).into());
    }
    Ok(())
}

fn delta_cmd(p: u64, r: usize, h: Option<&str>) -> Run {
    require_prime(p)?;
    if r < 2 {
        return Err(Error::OutOfRange {
            what: "r",
            value: r.to_string(),
            reason: "must be at least 2".into(),
        }
        .into());
    }
    let pk = PrimePower::new(p as u128, 1)?;
    let offsets: Vec<Vec<i64>> = match h {
        Some(spec) => {
            let v = parse_offsets(spec)?;
            if v.len() + 1 != r {
                return Err(Error::Dimension {
                    expected: r - 1,
                    got: v.len(),
                }
                .into());
            }
            vec![v]
        }
        None => {
            let total = (p as u128).checked_pow(r as u32 - 1).unwrap_or(u128::MAX);
            if total > MAX_DELTA_TABLE {
                return Err(Error::CapExceeded {
                    what: "delta table rows",
                    needed: total.to_string(),
                    cap: MAX_DELTA_TABLE.to_string(),
                }
                .into());
            }
            (0..total)
                .map(|mut i| {
                    (0..r - 1)
                        .map(|_| {
                            let x = (i % p as u128) as i64;
                            i /= p as u128;
                            x
                        })
                        .collect()
                })
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(offsets.len());
    let mut items = Vec::with_capacity(offsets.len());
    let mut text = String::new();
    for v in offsets {
        let hv = OffsetVector::new(v.clone())?;
        let d = delta::delta_prime(&hv, p);
        let e = delta::epsilon(&hv, pk)?;
        let n = correlations::count_solutions_brute(&hv, pk)?;
        let _ = writeln!(text, "h = {v:?}: N = {n}, Delta = {d}, epsilon = {}", exact::format(&e));
        let mut row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        row.extend([n.to_string(), d.to_string(), exact::format(&e)]);
        rows.push(row);
        items.push(json!({ "h": v, "n": n, "delta": d, "epsilon": exact::format(&e) }));
    }
    let mut header: Vec<String> = (1..r).map(|i| format!("h{i}")).collect();
    header.extend(["n".into(), "delta".into(), "epsilon".into()]);
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let result = if items.len() == 1 && h.is_some() {
        items.pop().expect("one row")
    } else {
        json!(items)
    };
    Ok(Output::new("delta", result)
        .modulus(p)
        .params(json!({ "prime": p, "r": r, "h": h }))
        .table(&header, rows)
        .text(text))
}

fn lambda(r: usize) -> Run {
    let dec = mobius_coefficients(r)?;
    let mut text = format!("r = {r}: {} partitions\n", dec.entries().len());
    for e in dec.entries() {
        let _ = writeln!(text, "{:<24} codim {}  lambda {}", e.partition.to_string(), e.codim, e.lambda);
    }
    let rows = dec
        .entries()
        .iter()
        .map(|e| vec![e.partition.to_string(), e.codim.to_string(), e.lambda.to_string()])
        .collect();
    Ok(Output::new("lambda", &dec)
        .params(json!({ "r": r }))
        .table(&["partition", "codim", "lambda"], rows)
        .text(text))
}

fn hensel(p: u64, a: u32, b: u32, r: usize) -> Run {
    require_prime(p)?;
    let d = delta::hensel_defect(p, a, b, r)?;
    let text = format!(
        "max_h |N(h,{p}^{b}) - {p}^{} N(h,{p}^{a})| / {p}^{} = {} ({:.6}) at h = {:?}\n",
        b - a,
        b - a,
        exact::format(&d.defect),
        d.defect_f64,
        d.argmax
    );
    Ok(Output::new("hensel", &d)
        .modulus(p)
        .params(json!({ "prime": p, "a": a, "b": b, "r": r }))
        .table(
            &["p", "a", "b", "r", "defect", "defect_f64"],
            vec![vec![
                p.to_string(),
                a.to_string(),
                b.to_string(),
                r.to_string(),
                exact::format(&d.defect),
                d.defect_f64.to_string(),
            ]],
        )
        .text(text))
}

fn truncate(spec: &str, policy: &str, gap: bool, r: usize, region: Option<&str>) -> Run {
    let m = parse_modulus(spec)?;
    let policy: &dyn TruncationPolicy = match policy {
        "default" => &DefaultPolicy,
        "identity" => &IdentityPolicy,
        other => return Err(Error::Parse(format!("unknown policy {other:?}")).into()),
    };
    let t = truncation::truncate(&m, policy)?;
    let ratio = exact::format(&(residues::mean_spacing(&m) / residues::mean_spacing(&t.q_tilde)));
    let gap_report = if gap {
        let spec = region.ok_or_else(|| Failure {
            code: crate::EXIT_USAGE,
            message: "--gap needs --box".into(),
            output: None,
        })?;
        let c = parse_box(spec, r)?;
        Some(truncation::truncation_gap_with(&m, &c, policy)?)
    } else {
        None
    };
    let mut text = format!("Q = {m}\nQ~ = {} ({} policy)\ns/s~ = {ratio}\n", t.q_tilde, t.policy);
    for p in &t.primes {
        let _ = writeln!(
            text,
            "p = {}: alpha {} -> {} (bound {:.4}{})",
            p.p,
            p.alpha,
            p.alpha_tilde,
            p.bound,
            match p.strict_inequality {
                Some(true) => ", strict inequality holds",
                Some(false) => ", strict inequality fails",
                None => "",
            }
        );
    }
    if let Some(gr) = &gap_report {
        let _ = writeln!(
            text,
            "gap = {} ({:.6}), exp(-sqrt(omega)) = {:.6}",
            exact::format(&gr.gap),
            gr.gap_f64,
            gr.decay
        );
    }
    let rows = t
        .primes
        .iter()
        .map(|p| {
            vec![
                p.p.to_string(),
                p.alpha.to_string(),
                p.alpha_tilde.to_string(),
                p.bound.to_string(),
                p.strict_inequality.map_or(String::new(), |b| b.to_string()),
            ]
        })
        .collect();
    Ok(Output::new(
        "truncate",
        json!({ "truncation": t, "spacing_ratio": ratio, "gap": gap_report }),
    )
    .modulus(&m)
    .params(json!({ "policy": t.policy, "gap": gap, "r": r, "box": region }))
    .table(&["p", "alpha", "alpha_tilde", "bound", "strict_inequality"], rows)
    .text(text))
}

fn appendix(spec: &str, k_const: f64, alpha: f64, beta: f64) -> Run {
    let m = parse_modulus(spec)?;
    let a = truncation::appendix_diagnostics(&m, k_const, alpha, beta)?;
    let mut text = format!("q = {m}, {} divisors, K = {k_const}\n", a.divisors);
    let mut rows = Vec::new();
    for ps in &a.power_sums {
        let _ = writeln!(
            text,
            "F(q, {}/2) = {:.6}{}",
            ps.k,
            ps.value,
            ps.bound.map_or(String::new(), |b| format!("  <= 3 p1^(1-k/2) = {b:.6}"))
        );
        rows.push(vec![format!("F(q,{}/2)", ps.k), ps.value.to_string(), ps.bound.map_or(String::new(), |b| b.to_string())]);
    }
    let _ = writeln!(text, "prod (1 + K p^-1/2) = {:.6}", a.euler_product);
    let _ = writeln!(text, "omega tail = {:.6} (share {:.6})", a.omega_tail, a.omega_tail_ratio);
    let _ = writeln!(
        text,
        "large divisor tail (c >= s^{alpha:.4}, c^-{beta}) = {:.6} (share {:.6})",
        a.large_divisor_tail, a.large_divisor_ratio
    );
    rows.push(vec!["euler_product".into(), a.euler_product.to_string(), String::new()]);
    rows.push(vec!["omega_tail".into(), a.omega_tail.to_string(), String::new()]);
    rows.push(vec!["large_divisor_tail".into(), a.large_divisor_tail.to_string(), String::new()]);
    Ok(Output::new("appendix", &a)
        .modulus(&m)
        .params(json!({ "K": k_const, "alpha": alpha, "beta": beta }))
        .table(&["quantity", "value", "bound"], rows)
        .text(text))
}

fn verify_cmd(suite: &str, inject_fault: bool, g: &Global) -> Run {
    let suite: Suite = suite.parse()?;
    let opts = VerifyOptions {
        perturb_lambda: inject_fault,
    };
    let report = verify::run(suite, &opts);
    let mut text = String::new();
    for c in &report.checks {
        let tag = match (c.passed, c.asserted) {
            (false, _) => "FAIL",
            (true, true) => "ok",
            (true, false) => "info",
        };
        let _ = writeln!(text, "[{tag:>4}] {} ({:.2}s): {}", c.name, c.seconds, c.detail);
    }
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.suite.to_string(),
                c.name.to_string(),
                c.passed.to_string(),
                c.asserted.to_string(),
                format!("{:.3}", c.seconds),
                c.detail.clone(),
            ]
        })
        .collect();
    let passed = report.passed();
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    let out = Output::new("verify", json!({ "passed": passed, "checks": report.checks }))
        .params(json!({ "suite": suite }))
        .table(&["suite", "check", "passed", "asserted", "seconds", "detail"], rows)
        .text(text);
    if passed {
        Ok(out)
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("verification failed: {}", failed.join(", ")),
            output: Some(out.render(g.format)),
        })
    }
}
