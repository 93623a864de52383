//! Exponent truncation `Q -> Q~` and the exact bookkeeping around it: the
//! completed-sum identity, periodicity modulo `C~`, and the divisor/lattice
//! sums the argument chops.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::correlations::{self, BoxRegion, LocalTable};
use crate::delta::lattice::{count_in_ranges, for_each_point};
use crate::delta::{delta_of_offsets, enumerate_composite_lattices, CompositeLattice, LatticeFilter};
use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::{divisors, DivisorFilter, FactoredModulus};
use crate::residues::{count_squares, mean_spacing};

/// Rule producing the truncated exponent of `p` from `(p, alpha_p, omega(q))`.
pub trait TruncationPolicy {
    fn name(&self) -> &'static str;
    fn exponent(&self, p: u128, alpha: u32, omega: usize) -> u32;
}

/// `min(alpha, max(1, floor(3/2 + sqrt(omega) / (7 log2 p))))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultPolicy;

/// Keeps every exponent.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPolicy;

impl TruncationPolicy for DefaultPolicy {
    fn name(&self) -> &'static str {
        "default"
    }

    fn exponent(&self, p: u128, alpha: u32, omega: usize) -> u32 {
        let cap = alpha_bound(p, omega).floor().max(1.0) as u32;
        alpha.min(cap)
    }
}

impl TruncationPolicy for IdentityPolicy {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn exponent(&self, _p: u128, alpha: u32, _omega: usize) -> u32 {
        alpha
    }
}

/// `3/2 + sqrt(omega) / (7 log2 p)`.
pub fn alpha_bound(p: u128, omega: usize) -> f64 {
    1.5 + (omega as f64).sqrt() / (7.0 * (p as f64).log2())
}

/// The constant `7 / ln 2` in the strict-truncation inequality.
pub fn strict_truncation_constant() -> f64 {
    7.0 / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedPrime {
    pub p: u128,
    pub alpha: u32,
    pub alpha_tilde: u32,
    pub bound: f64,
    pub within_bound: bool,
    /// `p^{-alpha~} <= p^{-1/2} exp(-sqrt(omega)/C1)`, only when `alpha~ < alpha`.
    pub strict_inequality: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Truncation {
    pub policy: &'static str,
    pub q: FactoredModulus,
    pub q_tilde: FactoredModulus,
    pub primes: Vec<TruncatedPrime>,
}

pub fn truncate(q: &FactoredModulus, policy: &dyn TruncationPolicy) -> Result<Truncation> {
    let omega = q.omega();
    let c1 = strict_truncation_constant();
    let mut factors = Vec::with_capacity(omega);
    let mut primes = Vec::with_capacity(omega);
    for pk in q.factors() {
        let at = policy.exponent(pk.p, pk.alpha, omega).clamp(1, pk.alpha);
        let bound = alpha_bound(pk.p, omega);
        let strict = (at < pk.alpha).then(|| {
            (at as f64 - 0.5) * (pk.p as f64).ln() >= (omega as f64).sqrt() / c1
        });
        primes.push(TruncatedPrime {
            p: pk.p,
            alpha: pk.alpha,
            alpha_tilde: at,
            bound,
            within_bound: at as f64 <= bound,
            strict_inequality: strict,
        });
        factors.push(pk.with_exponent(at));
    }
    Ok(Truncation {
        policy: policy.name(),
        q: q.clone(),
        q_tilde: FactoredModulus::from_prime_powers(factors)?,
        primes,
    })
}

pub fn truncate_default(q: &FactoredModulus) -> FactoredModulus {
    truncate(q, &DefaultPolicy).expect("valid modulus").q_tilde
}

#[derive(Debug, Clone, Serialize)]
pub struct CtildeBound {
    pub c: FactoredModulus,
    pub c_tilde: FactoredModulus,
    /// `omega(c) <= sqrt(omega(q))`
    pub hypothesis: bool,
    /// `C~^6 N_Q <= c^9 Q`, i.e. `C~ <= c^{3/2} s^{1/6}`.
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Compares `C~` against `c^{3/2} s^{1/6}` by sixth powers in exact integers.
pub fn ctilde_bound_check(c: &FactoredModulus, q: &FactoredModulus) -> Result<CtildeBound> {
    c.require_squarefree()?;
    let c_tilde = truncate_default(q).restrict_to(c)?;
    let omega = q.omega();
    let hypothesis = c.omega() * c.omega() <= omega;
    let n_q = count_squares(q);
    let lhs6: BigUint = c_tilde.value().pow(6u32) * &n_q;
    let rhs6: BigUint = c.value().pow(9u32) * q.value();
    let s = exact::to_f64(&mean_spacing(q));
    let cv = exact::to_f64(&exact::from_uint(c.value()));
    Ok(CtildeBound {
        lhs: exact::to_f64(&exact::from_uint(c_tilde.value())),
        rhs: cv.powf(1.5) * s.powf(1.0 / 6.0),
        holds: lhs6 <= rhs6,
        hypothesis,
        c: c.clone(),
        c_tilde,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationGap {
    pub q_tilde: FactoredModulus,
    #[serde(serialize_with = "exact::serialize")]
    pub s: BigRational,
    /// `s sum_{h ∈ sC} N(h, Q) / Q`
    #[serde(serialize_with = "exact::serialize")]
    pub full: BigRational,
    /// `s sum_{h ∈ sC} N(h, Q~) / Q~`
    #[serde(serialize_with = "exact::serialize")]
    pub truncated: BigRational,
    #[serde(serialize_with = "exact::serialize")]
    pub gap: BigRational,
    pub gap_f64: f64,
    /// `exp(-sqrt(omega))`, for trend comparison.
    pub decay: f64,
}

pub fn truncation_gap(q: &FactoredModulus, region: &BoxRegion) -> Result<TruncationGap> {
    truncation_gap_with(q, region, &DefaultPolicy)
}

pub fn truncation_gap_with(
    q: &FactoredModulus,
    region: &BoxRegion,
    policy: &dyn TruncationPolicy,
) -> Result<TruncationGap> {
    let q_tilde = truncate(q, policy)?.q_tilde;
    let s = mean_spacing(q);
    let sc = region.scaled(&s);
    let weigh = |m: &FactoredModulus| -> Result<BigRational> {
        let total = correlations::sum_n_over(m, &sc)?;
        Ok(&s * exact::from_int(total) / exact::from_uint(m.value()))
    };
    let full = weigh(q)?;
    let truncated = if &q_tilde == q {
        full.clone()
    } else {
        weigh(&q_tilde)?
    };
    let gap = exact::abs(&(&full - &truncated));
    Ok(TruncationGap {
        gap_f64: exact::to_f64(&gap),
        decay: (-(q.omega() as f64).sqrt()).exp(),
        q_tilde,
        s,
        full,
        truncated,
        gap,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpacingRatio {
    pub q_tilde: FactoredModulus,
    pub omega: usize,
    #[serde(serialize_with = "exact::serialize")]
    pub ratio: BigRational,
    pub ratio_f64: f64,
}

/// `(Q / N_Q) / (Q~ / N_{Q~})` under the default policy.
pub fn spacing_ratio(q: &FactoredModulus) -> SpacingRatio {
    let q_tilde = truncate_default(q);
    let ratio = mean_spacing(q) / mean_spacing(&q_tilde);
    SpacingRatio {
        ratio_f64: exact::to_f64(&ratio),
        omega: q.omega(),
        q_tilde,
        ratio,
    }
}

/// Per-prime-power tables for `B_p(h) = 2^r N(h, p^a) - Δ(h, p) p^a`, which
/// is `p^a ε(h, p^a) Δ(h, p)` and hence an integer.
struct LocalParts {
    r: usize,
    locals: Vec<(LocalTable, u64)>,
}

impl LocalParts {
    fn new(q: &FactoredModulus, r: usize) -> Result<Self> {
        let locals = q
            .factors()
            .iter()
            .map(|&pk| {
                let t = LocalTable::build(pk, r, correlations::table::DEFAULT_TABLE_CAP)?;
                Ok((t, pk.prime_u64()?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalParts { r, locals })
    }

    fn len(&self) -> usize {
        self.locals.len()
    }

    /// `(A_p, B_p)` with `A_p = Δ p^a` and `A_p + B_p = 2^r N(h, p^a)`.
    fn parts(&self, h: &[i64], out: &mut Vec<(i128, i128)>) {
        out.clear();
        for (t, p) in &self.locals {
            let m = t.modulus() as i128;
            let a = delta_of_offsets(h, *p) as i128 * m;
            let n = (t.get(h) as i128) << self.r;
            out.push((a, n - a));
        }
    }

    /// `prod_{i in mask} B_i(h)`, i.e. `C~ ε(h, C~) Δ(h, c)` for the primes in
    /// `mask`.
    fn b_product(&self, h: &[i64], mask: u32, scratch: &mut Vec<(i128, i128)>) -> i128 {
        self.parts(h, scratch);
        scratch
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &(_, b))| b)
            .product()
    }
}

fn mask_modulus(q: &FactoredModulus, mask: u32) -> Result<FactoredModulus> {
    FactoredModulus::from_prime_powers(
        q.factors()
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &pk)| pk)
            .collect(),
    )
}

fn complement_primes(q: &FactoredModulus, mask: u32) -> Result<FactoredModulus> {
    let primes: Vec<u128> = q
        .factors()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 0)
        .map(|(_, pk)| pk.p)
        .collect();
    FactoredModulus::from_primes(&primes)
}

fn grid(side: u128, dim: usize, cap: u128) -> Result<Vec<(i64, i64)>> {
    let points = side.checked_pow(dim as u32).unwrap_or(u128::MAX);
    if points > cap {
        return Err(Error::cap("residue grid points", points, cap));
    }
    Ok(vec![(0, side as i64 - 1); dim])
}

/// Largest grid `(Z/Q~)^{r-1}` swept exhaustively by the exact identities.
pub const MAX_IDENTITY_POINTS: u128 = 50_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct ChainStep {
    pub name: &'static str,
    #[serde(serialize_with = "exact::serialize")]
    pub value: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletedSum {
    pub q_tilde: FactoredModulus,
    pub r: usize,
    pub steps: Vec<ChainStep>,
    pub holds: bool,
}

/// One term of the expanded sum: divisor `c`, lattice `L` with
/// `supp(L) | q/c`, and its exact contribution scaled by `2^{r omega}`.
#[derive(Debug, Clone)]
struct ExpansionTerm {
    c: u128,
    omega_c: usize,
    lattice: CompositeLattice,
    value: i128,
}

struct Expansion {
    scale: i128,
    terms: Vec<ExpansionTerm>,
}

/// `2^{r omega} sum_h N(h, Q~) = sum_c D_c sum_L λ(L) ((Q~/C~)^{r-1}/disc L)
/// sum_{h mod C~} B_c(h)` with `D_c = Q~/C~`.
fn expansion(q_tilde: &FactoredModulus, r: usize, parts: &LocalParts) -> Result<Expansion> {
    let omega = q_tilde.omega();
    let qv = q_tilde.to_u128()?;
    let mut terms = Vec::new();
    let mut scratch = Vec::new();
    for mask in 0..(1u32 << omega) {
        let ct = mask_modulus(q_tilde, mask)?;
        let ctv = ct.to_u128()?;
        let d = qv / ctv;
        let mut s_c = 0i128;
        for_each_point(&grid(ctv, r - 1, MAX_IDENTITY_POINTS)?, |h| {
            s_c += parts.b_product(h, mask, &mut scratch);
        });
        let rest = complement_primes(q_tilde, mask)?;
        let lattices = enumerate_composite_lattices(
            &rest,
            r,
            &LatticeFilter {
                include_trivial: true,
                ..Default::default()
            },
        )?;
        let index = d.pow(r as u32 - 1);
        for l in lattices {
            debug_assert_eq!(index % l.disc, 0);
            let value = d as i128 * l.lambda as i128 * (index / l.disc) as i128 * s_c;
            terms.push(ExpansionTerm {
                c: ct.rad().try_into().map_err(|_| Error::cap("divisor", "u128", u128::MAX))?,
                omega_c: ct.omega(),
                lattice: l,
                value,
            });
        }
    }
    Ok(Expansion {
        scale: 1i128 << (r * omega),
        terms,
    })
}

fn check_feasible(q_tilde: &FactoredModulus, r: usize) -> Result<()> {
    if !(2..=3).contains(&r) {
        return Err(Error::range("r", r, "the expanded identity runs for r in {2, 3}"));
    }
    if q_tilde.omega() > 4 {
        return Err(Error::range(
            "omega",
            q_tilde.omega(),
            "the expanded identity runs for at most 4 primes",
        ));
    }
    Ok(())
}

/// Evaluates each link of the chain
/// `sum_h N(h,Q~) = (pointwise Δ/ε expansion) = (lattice form) = N_{Q~}^r`
/// exactly.
pub fn completed_sum_identity(q_tilde: &FactoredModulus, r: usize) -> Result<CompletedSum> {
    check_feasible(q_tilde, r)?;
    let parts = LocalParts::new(q_tilde, r)?;
    let qv = q_tilde.to_u128()?;
    let omega = parts.len();
    let ranges = grid(qv, r - 1, MAX_IDENTITY_POINTS)?;

    let mut direct = 0i128;
    let mut pointwise = 0i128;
    let mut scratch = Vec::new();
    for_each_point(&ranges, |h| {
        parts.parts(h, &mut scratch);
        direct += scratch.iter().map(|&(a, b)| (a + b) >> r).product::<i128>();
        for mask in 0..(1u32 << omega) {
            pointwise += scratch
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 1 { b } else { a })
                .product::<i128>();
        }
    });
    let exp = expansion(q_tilde, r, &parts)?;
    let lattice_form: i128 = exp.terms.iter().map(|t| t.value).sum();
    let n = count_squares(q_tilde);
    let power = exact::from_uint(&n.pow(r as u32));
    let scale = exact::from_int(exp.scale);
    let steps = vec![
        ChainStep {
            name: "sum_h N(h,Q)",
            value: exact::from_int(direct),
        },
        ChainStep {
            name: "delta-epsilon expansion",
            value: exact::from_int(pointwise) / &scale,
        },
        ChainStep {
            name: "lattice expansion",
            value: exact::from_int(lattice_form) / &scale,
        },
        ChainStep {
            name: "N_Q^r",
            value: power,
        },
    ];
    let holds = steps.windows(2).all(|w| w[0].value == w[1].value);
    Ok(CompletedSum {
        q_tilde: q_tilde.clone(),
        r,
        steps,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainMismatch {
    pub c: u128,
    pub lattice: String,
    pub lhs: i128,
    pub rhs: i128,
}

#[derive(Debug, Clone, Serialize)]
pub struct FundamentalDomain {
    pub q_tilde: FactoredModulus,
    pub r: usize,
    pub checks: usize,
    pub mismatches: Vec<DomainMismatch>,
}

/// For every `c | q` and lattice `L` with `supp(L) | q/c`:
/// `sum_{h mod Q~, h ∈ L} B_c(h) = ((Q~/C~)^{r-1} / disc L) sum_{h mod C~} B_c(h)`.
pub fn fundamental_domain_check(q_tilde: &FactoredModulus, r: usize) -> Result<FundamentalDomain> {
    check_feasible(q_tilde, r)?;
    let parts = LocalParts::new(q_tilde, r)?;
    let qv = q_tilde.to_u128()?;
    let full = grid(qv, r - 1, MAX_IDENTITY_POINTS)?;
    let exp = expansion(q_tilde, r, &parts)?;
    let mut mismatches = Vec::new();
    let mut scratch = Vec::new();
    for t in &exp.terms {
        let mask = mask_of(q_tilde, t.c);
        let mut lhs = 0i128;
        for_each_point(&full, |h| {
            if t.lattice.contains(h) {
                lhs += parts.b_product(h, mask, &mut scratch);
            }
        });
        // undo the D_c and λ factors carried by the term
        let d = (qv / mask_modulus(q_tilde, mask)?.to_u128()?) as i128;
        let rhs = t.value / (d * t.lattice.lambda as i128);
        if lhs != rhs {
            mismatches.push(DomainMismatch {
                c: t.c,
                lattice: lattice_label(&t.lattice),
                lhs,
                rhs,
            });
        }
    }
    Ok(FundamentalDomain {
        q_tilde: q_tilde.clone(),
        r,
        checks: exp.terms.len(),
        mismatches,
    })
}

fn mask_of(q: &FactoredModulus, c: u128) -> u32 {
    q.factors()
        .iter()
        .enumerate()
        .filter(|(_, pk)| c % pk.p == 0)
        .fold(0, |m, (i, _)| m | 1 << i)
}

pub fn lattice_label(l: &CompositeLattice) -> String {
    if l.is_trivial() {
        return "Z".into();
    }
    l.assignment
        .iter()
        .map(|(p, part)| format!("{p}:{part}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Serialize)]
pub struct Periodicity {
    pub c_tilde: FactoredModulus,
    /// `supp(L)` coprime to `c`.
    pub coprime: bool,
    /// `disc(L) C~ <= s`.
    pub small_period: bool,
    pub points: u128,
    /// `sum_{h ∈ sC ∩ L} ε(h,C~) Δ(h,c)`
    #[serde(serialize_with = "exact::serialize")]
    pub lhs: BigRational,
    /// `vol(sC) / disc(C~ L) * sum_{h mod C~} ε(h,C~) Δ(h,c)`
    #[serde(serialize_with = "exact::serialize")]
    pub predicted: BigRational,
    #[serde(serialize_with = "exact::serialize")]
    pub residual: BigRational,
    /// `lhs - #(sC ∩ L) * mean`: vanishes when `ε Δ` is constant.
    #[serde(serialize_with = "exact::serialize")]
    pub periodicity_residual: BigRational,
    /// `mean * (#(sC ∩ L) - vol(sC)/disc L)`: the lattice-point count error.
    #[serde(serialize_with = "exact::serialize")]
    pub lattice_residual: BigRational,
}

/// Compares the sum of `ε(h,C~) Δ(h,c)` over `sC ∩ L` with its periodic
/// average. The total residual splits into a periodicity part and a
/// lattice-point-count part.
pub fn periodicity_check(
    l: &CompositeLattice,
    c: &FactoredModulus,
    q_tilde: &FactoredModulus,
    region: &BoxRegion,
    s: &BigRational,
) -> Result<Periodicity> {
    c.require_squarefree()?;
    let r = region.r();
    let c_tilde = q_tilde.restrict_to(c)?;
    let ctv = c_tilde.to_u128()?;
    let parts = LocalParts::new(&c_tilde, r)?;
    let all = (1u32 << parts.len()) - 1;
    let coprime = l.primes().all(|p| c.exponent_of(p as u128) == 0);
    let small_period = exact::from_int(l.disc) * exact::from_int(ctv) <= *s;

    let mut scratch = Vec::new();
    let mut period_sum = 0i128;
    for_each_point(&grid(ctv, r - 1, MAX_IDENTITY_POINTS)?, |h| {
        period_sum += parts.b_product(h, all, &mut scratch);
    });
    let ct = exact::from_int(ctv);
    let cells = exact::pow(&ct, r as u32 - 1);
    let mean = exact::from_int(period_sum) / &ct / &cells;

    let sc = region.scaled(s);
    let mut lhs_num = 0i128;
    let mut points = 0u128;
    if let Some(ranges) = sc.integer_ranges()? {
        for_each_point(&ranges, |h| {
            if l.contains(h) {
                points += 1;
                lhs_num += parts.b_product(h, all, &mut scratch);
            }
        });
    }
    let lhs = exact::from_int(lhs_num) / &ct;
    let expected_points = sc.volume() / exact::from_int(l.disc);
    let predicted = &expected_points * &mean;
    let periodicity_residual = &lhs - exact::from_int(points) * &mean;
    let lattice_residual = &mean * (exact::from_int(points) - &expected_points);
    Ok(Periodicity {
        c_tilde,
        coprime,
        small_period,
        points,
        residual: &lhs - &predicted,
        lhs,
        predicted,
        periodicity_residual,
        lattice_residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSum {
    #[serde(serialize_with = "exact::serialize")]
    pub kept: BigRational,
    #[serde(serialize_with = "exact::serialize")]
    pub discarded: BigRational,
}

impl SplitSum {
    fn split<T>(items: &[T], keep: impl Fn(&T) -> bool, value: impl Fn(&T) -> BigRational) -> Self {
        let mut kept = BigRational::zero();
        let mut discarded = BigRational::zero();
        for it in items {
            if keep(it) {
                kept += value(it);
            } else {
                discarded += value(it);
            }
        }
        SplitSum { kept, discarded }
    }

    pub fn total(&self) -> BigRational {
        &self.kept + &self.discarded
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Chop {
    #[serde(serialize_with = "exact::serialize")]
    pub total: BigRational,
    /// `c <= s^{1/3}`
    pub by_divisor_size: SplitSum,
    /// `omega(c) <= sqrt(omega(q))`
    pub by_divisor_omega: SplitSum,
    /// `disc(L) <= s^{1/3}`
    pub by_discriminant: SplitSum,
}

/// Splits the lattice expansion of `sum_h N(h, Q~)` by each cut the
/// argument makes, returning the kept and discarded mass exactly.
pub fn chop_expansion(q_tilde: &FactoredModulus, r: usize, s: &BigRational) -> Result<Chop> {
    check_feasible(q_tilde, r)?;
    let parts = LocalParts::new(q_tilde, r)?;
    let exp = expansion(q_tilde, r, &parts)?;
    let scale = exact::from_int(exp.scale);
    let value = |t: &ExpansionTerm| exact::from_int(t.value) / &scale;
    let s3 = s.clone();
    let omega = q_tilde.omega();
    let cube_le_s = |x: u128| exact::pow(&exact::from_int(x), 3) <= s3;
    Ok(Chop {
        total: exp.terms.iter().map(value).sum(),
        by_divisor_size: SplitSum::split(&exp.terms, |t| cube_le_s(t.c), value),
        by_divisor_omega: SplitSum::split(&exp.terms, |t| t.omega_c * t.omega_c <= omega, value),
        by_discriminant: SplitSum::split(&exp.terms, |t| cube_le_s(t.lattice.disc), value),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSum {
    pub k: u32,
    pub value: f64,
    /// `3 p_1^{1-k/2}`, asserted for `k >= 3`.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Appendix {
    pub q: FactoredModulus,
    pub k_const: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `F(q, k/2)` for `k = 1..6`.
    pub power_sums: Vec<PowerSum>,
    /// `prod_{p | q} (1 + K p^{-1/2})`
    pub euler_product: f64,
    /// `sum_{c | q, omega(c) >= sqrt(omega)} K^{omega(c)} c^{-1/2}`
    pub omega_tail: f64,
    pub omega_tail_ratio: f64,
    /// `sum_{c | q, c >= s^alpha} c^{-beta}`
    pub large_divisor_tail: f64,
    pub large_divisor_ratio: f64,
    pub divisors: usize,
}

/// Largest `omega` for which the divisor sums are enumerated.
pub const MAX_APPENDIX_OMEGA: usize = 24;

pub fn appendix_diagnostics(
    q: &FactoredModulus,
    k_const: f64,
    alpha: f64,
    beta: f64,
) -> Result<Appendix> {
    q.require_squarefree()?;
    if q.omega() > MAX_APPENDIX_OMEGA {
        return Err(Error::cap("omega for divisor sums", q.omega(), MAX_APPENDIX_OMEGA));
    }
    let p1 = q.primes().next().map(|p| p as f64);
    let mut power_sums = Vec::new();
    for k in 1..=6u32 {
        let value = crate::modulus::big_f(q, k as f64 / 2.0)?;
        let bound = match (k >= 3, p1) {
            (true, Some(p1)) => Some(3.0 * p1.powf(1.0 - k as f64 / 2.0)),
            _ => None,
        };
        power_sums.push(PowerSum {
            k,
            value,
            within_bound: bound.map(|b| value <= b),
            bound,
        });
    }
    let euler_product: f64 = q.primes().map(|p| 1.0 + k_const / (p as f64).sqrt()).product();
    let omega = q.omega();
    let s = exact::to_f64(&mean_spacing(q));
    let threshold = s.powf(alpha);
    let divs = divisors(q, &DivisorFilter::none())?;
    let mut omega_tail = 0.0;
    let mut all_weighted = 0.0;
    let mut large_tail = 0.0;
    let mut all_beta = 0.0;
    for d in &divs {
        let dv = exact::to_f64(&exact::from_uint(d.value()));
        let w = k_const.powi(d.omega() as i32) / dv.sqrt();
        all_weighted += w;
        if d.omega() * d.omega() >= omega {
            omega_tail += w;
        }
        let b = dv.powf(-beta);
        all_beta += b;
        if dv >= threshold {
            large_tail += b;
        }
    }
    Ok(Appendix {
        q: q.clone(),
        k_const,
        alpha,
        beta,
        power_sums,
        euler_product,
        omega_tail,
        omega_tail_ratio: omega_tail / all_weighted,
        large_divisor_tail: large_tail,
        large_divisor_ratio: large_tail / all_beta,
        divisors: divs.len(),
    })
}

/// `λ`-weighted count `sum_L λ(L) #(sC ∩ L)` against its volume prediction,
/// scaled by `R^{n-1}` with `R` the half-diagonal of `sC`.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzRow {
    pub lattice: String,
    pub disc: u128,
    pub count: u128,
    #[serde(serialize_with = "exact::serialize")]
    pub predicted: BigRational,
    pub scaled_residual: f64,
}

/// Lattice-point count residuals `|#(sC ∩ L) - vol(sC)/disc(L)| / R^{n-1}`
/// for every lattice of squarefree `q`.
pub fn lipschitz_residuals(
    q: &FactoredModulus,
    region: &BoxRegion,
    s: &BigRational,
) -> Result<Vec<LipschitzRow>> {
    let r = region.r();
    let sc = region.scaled(s);
    let radius = sc
        .intervals()
        .iter()
        .map(|(a, b)| {
            let w = exact::to_f64(&(b - a)) / 2.0;
            w * w
        })
        .sum::<f64>()
        .sqrt();
    let norm = radius.powi(r as i32 - 2).max(1.0);
    let ranges = sc.integer_ranges()?;
    let ls = enumerate_composite_lattices(
        q,
        r,
        &LatticeFilter {
            include_trivial: true,
            ..Default::default()
        },
    )?;
    Ok(ls
        .iter()
        .map(|l| {
            let count = ranges.as_deref().map_or(0, |rg| count_in_ranges(l, rg));
            let predicted = sc.volume() / exact::from_int(l.disc);
            let residual = exact::to_f64(&(exact::from_int(count) - &predicted)).abs();
            LipschitzRow {
                lattice: lattice_label(l),
                disc: l.disc,
                count,
                predicted,
                scaled_residual: residual / norm,
            }
        })
        .collect())
}
