//! `N(h, Q)` and the r-level correlation `R_r(C, Q)`.
//!
//! `R_r(C, Q) = (1/N_Q) sum_{h in sC ∩ Z^{r-1}} N(h, Q)` with `s = Q / N_Q`.
//! Two independent routes are provided:
//!
//! * **sum**: sweep the integer points of `sC`, multiplying per-prime
//!   counts `N(h, p^alpha)` (multiplicativity via CRT);
//! * **direct**: walk the sorted residue set `X_Q` and count the `r`-tuples
//!   whose consecutive differences, taken as representatives in
//!   `(-Q/2, Q/2]`, land in `sC`.
//!
//! Whenever `sC` sits inside the centered fundamental domain the two counts
//! are the same integer, which makes each route an oracle for the other.

pub mod region;
pub mod table;

use num_bigint::BigUint;
use num_rational::BigRational;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::{FactoredModulus, PrimePower};
use crate::residues::{self, ResidueSet};

pub use region::{wall_check, BoxRegion, Cuboid, OffsetVector};
pub use table::{LocalTable, NEvaluator};

/// Default cap on the number of integer points swept in `sC`.
pub const DEFAULT_MAX_H_POINTS: u128 = 50_000_000;

/// `#{x mod p^alpha : x + t_i is a square mod p^alpha for i = 0..r-1}`.
pub fn count_solutions_brute(h: &OffsetVector, pk: PrimePower) -> Result<u64> {
    let m = pk.modulus_u64()?;
    let squares = residues::squares_mod_pk(pk)?;
    let mut is_square = vec![false; m as usize];
    for s in squares {
        is_square[s as usize] = true;
    }
    let t = h.partial_sums_mod(m);
    Ok((0..m)
        .filter(|&x| t.iter().all(|&ti| is_square[((x + ti) % m) as usize]))
        .count() as u64)
}

/// `N(h, Q)` as the product of the per-prime-power counts.
pub fn big_n(h: &OffsetVector, q: &FactoredModulus) -> Result<u64> {
    let mut acc = 1u64;
    for &pk in q.factors() {
        acc *= count_solutions_brute(h, pk)?;
        if acc == 0 {
            break;
        }
    }
    Ok(acc)
}

/// `N(h, Q)` by scanning `x mod Q` against a direct square sieve. Ignores the
/// factorization entirely, so it can check multiplicativity.
pub fn count_solutions_direct(h: &OffsetVector, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    if q > residues::SIEVE_ORACLE_LIMIT {
        return Err(Error::cap("modulus for direct count", q, residues::SIEVE_ORACLE_LIMIT));
    }
    let mut is_square = vec![false; q as usize];
    for s in residues::squares_mod(q) {
        is_square[s as usize] = true;
    }
    let t = h.partial_sums_mod(q);
    Ok((0..q)
        .filter(|&x| t.iter().all(|&ti| is_square[((x + ti) % q) as usize]))
        .count() as u64)
}

/// `N((h), q)` for every `h mod q` (pair correlation, `r = 2`), computed as
/// the cyclic autocorrelation of the square indicator by FFT. Uses only the
/// direct sieve of `{x^2 mod q}`.
pub fn pair_counts_direct(q: u64) -> Result<Vec<u64>> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    if q > residues::SIEVE_ORACLE_LIMIT {
        return Err(Error::cap("modulus for pair counts", q, residues::SIEVE_ORACLE_LIMIT));
    }
    let n = q as usize;
    let mut buf = vec![Complex::new(0.0f64, 0.0); n];
    for s in residues::squares_mod(q) {
        buf[s as usize].re = 1.0;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter()
        .map(|z| {
            let v = z.re * scale;
            let r = v.round();
            if (v - r).abs() > 0.25 {
                Err(Error::InvalidArgument(format!(
                    "FFT autocorrelation lost integrality at q = {q}"
                )))
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sum,
    Direct,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Method::Sum),
            "direct" => Ok(Method::Direct),
            "both" => Ok(Method::Both),
            _ => Err(Error::Parse(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationOptions {
    pub method: Method,
    pub per_h: bool,
    pub max_h_points: u128,
    pub max_residues: u64,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            method: Method::Sum,
            per_h: false,
            max_h_points: DEFAULT_MAX_H_POINTS,
            max_residues: residues::DEFAULT_RESIDUE_CAP,
        }
    }
}

impl CorrelationOptions {
    pub fn method(method: Method) -> Self {
        CorrelationOptions {
            method,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HCount {
    pub h: Vec<i64>,
    pub n: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationResult {
    pub r: usize,
    #[serde(serialize_with = "exact::serialize")]
    pub s: BigRational,
    #[serde(serialize_with = "exact::serialize")]
    pub volume: BigRational,
    /// `R_r(C, Q)` exactly.
    #[serde(serialize_with = "exact::serialize", rename = "R_exact")]
    pub value: BigRational,
    #[serde(rename = "R")]
    pub value_f64: f64,
    pub num_h: u128,
    #[serde(serialize_with = "exact::serialize_uint")]
    pub n_q: BigUint,
    /// `sum_h N(h, Q)` from the sum route.
    pub sum_count: Option<u128>,
    /// Admissible tuple count from the direct route.
    pub direct_count: Option<u128>,
    pub per_h: Option<Vec<HCount>>,
}

pub fn r_correlation(c: &BoxRegion, q: &FactoredModulus, method: Method) -> Result<CorrelationResult> {
    r_correlation_with(c, q, &CorrelationOptions::method(method))
}

pub fn r_correlation_with(
    c: &BoxRegion,
    q: &FactoredModulus,
    opts: &CorrelationOptions,
) -> Result<CorrelationResult> {
    let r = c.r();
    let s = residues::mean_spacing(q);
    let n_q = residues::count_squares(q);
    let sc = c.scaled(&s);
    let ranges = sc.integer_ranges()?;
    let num_h = sc.integer_point_count()?;
    if num_h > opts.max_h_points {
        return Err(Error::cap("integer points in sC", num_h, opts.max_h_points));
    }

    let mut per_h = None;
    let sum_count = if matches!(opts.method, Method::Sum | Method::Both) {
        let evaluator = NEvaluator::new(q, r)?;
        let (total, table) = sweep_box(&evaluator, ranges.as_deref(), opts.per_h);
        per_h = table;
        Some(total)
    } else {
        None
    };

    let direct_count = if matches!(opts.method, Method::Direct | Method::Both) {
        let x = residues::enumerate_squares_capped(q, opts.max_residues)?;
        Some(match &ranges {
            None => 0,
            Some(rg) => direct_tuple_count(&x, rg)?,
        })
    } else {
        None
    };

    if let (Some(a), Some(b)) = (sum_count, direct_count) {
        if a != b {
            return Err(Error::MethodDisagreement {
                sum: a.to_string(),
                direct: b.to_string(),
            });
        }
    }
    let count = sum_count.or(direct_count).expect("at least one method ran");
    let value = BigRational::new(count.into(), n_q.clone().into());
    Ok(CorrelationResult {
        r,
        value_f64: exact::to_f64(&value),
        value,
        volume: c.volume(),
        s,
        num_h,
        n_q,
        sum_count,
        direct_count,
        per_h,
    })
}

/// `sum_{h ∈ region ∩ Z^{r-1}} N(h, Q)` by the per-prime tables.
pub fn sum_n_over(q: &FactoredModulus, region: &Cuboid) -> Result<u128> {
    let evaluator = NEvaluator::new(q, region.r())?;
    Ok(sweep_box(&evaluator, region.integer_ranges()?.as_deref(), false).0)
}

/// `sum N(h, Q)` over the integer grid, parallel over the first coordinate.
fn sweep_box(
    evaluator: &NEvaluator,
    ranges: Option<&[(i64, i64)]>,
    keep: bool,
) -> (u128, Option<Vec<HCount>>) {
    let Some(ranges) = ranges else {
        return (0, keep.then(Vec::new));
    };
    let (lo0, hi0) = ranges[0];
    let rest = &ranges[1..];
    let parts: Vec<(u128, Vec<HCount>)> = (lo0..=hi0)
        .into_par_iter()
        .map(|h0| {
            let mut h: Vec<i64> = std::iter::once(h0).chain(rest.iter().map(|r| r.0)).collect();
            let mut total = 0u128;
            let mut rows = Vec::new();
            loop {
                let n = evaluator.eval(&h);
                total += n as u128;
                if keep {
                    rows.push(HCount { h: h.clone(), n });
                }
                // odometer over coordinates 1..
                let mut i = 1;
                loop {
                    if i == h.len() {
                        return (total, rows);
                    }
                    if h[i] < ranges[i].1 {
                        h[i] += 1;
                        break;
                    }
                    h[i] = ranges[i].0;
                    i += 1;
                }
            }
        })
        .collect();
    let total = parts.iter().map(|p| p.0).sum();
    let table = keep.then(|| parts.into_iter().flat_map(|p| p.1).collect());
    (total, table)
}

/// Is the integer grid inside `(-Q/2, Q/2]^{r-1}`?
fn inside_centered_domain(ranges: &[(i64, i64)], q: u64) -> bool {
    ranges
        .iter()
        .all(|&(lo, hi)| 2 * (lo as i128) > -(q as i128) && 2 * (hi as i128) <= q as i128)
}

/// Counts tuples `(x_1, ..., x_r)` in `X_Q^r` whose centered consecutive
/// differences lie in the integer box.
pub fn direct_tuple_count(x: &ResidueSet, ranges: &[(i64, i64)]) -> Result<u128> {
    let q = x.q();
    if !inside_centered_domain(ranges, q) {
        return Err(Error::range(
            "scaled box",
            format!("{ranges:?}"),
            format!("direct method needs sC inside (-Q/2, Q/2]^(r-1) with Q = {q}"),
        ));
    }
    let elems = x.elements();
    let total: u128 = elems
        .par_iter()
        .map(|&x1| count_from(elems, q, x1, ranges))
        .sum();
    Ok(total)
}

fn count_from(elems: &[u64], q: u64, from: u64, ranges: &[(i64, i64)]) -> u128 {
    let Some((&(lo, hi), rest)) = ranges.split_first() else {
        return 1;
    };
    let mut total = 0u128;
    for_each_in_window(elems, q, from, lo, hi, |next| {
        total += count_from(elems, q, next, rest);
    });
    total
}

/// Calls `f(y)` for every `y` in `elems` with `y - from mod Q` in the cyclic
/// window `[lo, hi]` (`lo..=hi` lies inside `(-Q/2, Q/2]`).
fn for_each_in_window(elems: &[u64], q: u64, from: u64, lo: i64, hi: i64, mut f: impl FnMut(u64)) {
    let len = (hi - lo + 1) as u64;
    let start = (from as i128 + lo as i128).rem_euclid(q as i128) as u64;
    let mut scan = |a: u64, b: u64| {
        // [a, b)
        let i = elems.partition_point(|&v| v < a);
        for &v in &elems[i..] {
            if v >= b {
                break;
            }
            f(v);
        }
    };
    if len >= q {
        scan(0, q);
    } else if start + len <= q {
        scan(start, start + len);
    } else {
        scan(start, q);
        scan(0, start + len - q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::factor;

    fn ov(h: &[i64]) -> OffsetVector {
        OffsetVector::new(h.to_vec()).unwrap()
    }

    fn pp(p: u128, a: u32) -> PrimePower {
        PrimePower::new(p, a).unwrap()
    }

    #[test]
    fn brute_examples() {
        assert_eq!(count_solutions_brute(&ov(&[1]), pp(7, 1)).unwrap(), 2);
        assert_eq!(count_solutions_brute(&ov(&[0]), pp(7, 1)).unwrap(), 4);
        assert_eq!(count_solutions_brute(&ov(&[3]), pp(3, 2)).unwrap(), 3);
    }

    #[test]
    fn big_n_examples() {
        let q12 = factor(12).unwrap();
        assert_eq!(big_n(&ov(&[0]), &q12).unwrap(), 4);
        // pairs of squares mod 12 differing by 1: direct count
        let direct = count_solutions_direct(&ov(&[1]), 12).unwrap();
        assert_eq!(big_n(&ov(&[1]), &q12).unwrap(), direct);
        for q in [7u128, 12, 45, 360] {
            let fq = factor(q).unwrap();
            let nq: u64 = residues::count_squares(&fq).try_into().unwrap();
            assert_eq!(big_n(&ov(&[0, 0]), &fq).unwrap(), nq);
        }
    }

    #[test]
    fn pair_counts_by_fft_match_scan() {
        for q in [1u64, 2, 7, 12, 45, 97, 360] {
            let fft = pair_counts_direct(q).unwrap();
            for h in 0..q {
                assert_eq!(fft[h as usize], count_solutions_direct(&ov(&[h as i64]), q).unwrap());
            }
        }
    }

    #[test]
    fn r2_at_seven() {
        let c = BoxRegion::from_ratios(&[((1, 2), (3, 2))]).unwrap();
        let res = r_correlation(&c, &factor(7).unwrap(), Method::Both).unwrap();
        assert_eq!(res.s, exact::ratio(7, 4));
        assert_eq!(res.num_h, 2);
        assert_eq!(res.value, exact::ratio(1, 1));
        assert_eq!(res.sum_count, Some(4));
        assert_eq!(res.direct_count, Some(4));
    }

    #[test]
    fn degenerate_modulus_one() {
        let c = BoxRegion::from_ratios(&[((1, 2), (3, 2))]).unwrap();
        let q1 = factor(1).unwrap();
        // mod 1 every offset is admissible: N(1, 1) = 1 and N_1 = 1
        let res = r_correlation(&c, &q1, Method::Sum).unwrap();
        assert_eq!(res.value, exact::ratio(1, 1));
        // sC = [1/2, 3/2] leaves the centered domain (-1/2, 1/2]
        assert!(r_correlation(&c, &q1, Method::Direct).is_err());
    }

    #[test]
    fn methods_agree_r3() {
        let c = BoxRegion::from_ratios(&[((1, 2), (3, 2)), ((1, 2), (3, 2))]).unwrap();
        for q in [105u128, 360, 1155, 2 * 3 * 5 * 7 * 11 * 13] {
            let res = r_correlation(&c, &factor(q).unwrap(), Method::Both).unwrap();
            assert_eq!(res.sum_count, res.direct_count, "q={q}");
        }
        let c = BoxRegion::from_ratios(&[((-3, 2), (-1, 2)), ((5, 2), (4, 1))]).unwrap();
        let res = r_correlation(&c, &factor(9009).unwrap(), Method::Both).unwrap();
        assert_eq!(res.sum_count, res.direct_count);
    }

    #[test]
    fn per_h_table_sums_to_total() {
        let c = BoxRegion::from_ratios(&[((1, 2), (3, 2))]).unwrap();
        let opts = CorrelationOptions {
            per_h: true,
            ..Default::default()
        };
        let res = r_correlation_with(&c, &factor(2310).unwrap(), &opts).unwrap();
        let rows = res.per_h.unwrap();
        assert_eq!(rows.len() as u128, res.num_h);
        assert_eq!(rows.iter().map(|r| r.n as u128).sum::<u128>(), res.sum_count.unwrap());
    }

    #[test]
    fn shift_invariance() {
        let q = factor(360).unwrap();
        for h in -20i64..20 {
            let a = big_n(&ov(&[h, 3]), &q).unwrap();
            let b = big_n(&ov(&[h + 360, 3 - 720]), &q).unwrap();
            assert_eq!(a, b);
        }
    }
}
