//! Degeneracy factors `Δ(h, p)`, the residuals `ε(h, p^k)`, the partition
//! lattices `L_p` with their Möbius coefficients, and the Hensel lifting
//! defect.
//!
//! `N(h, p^k) = Δ(h, p) p^k (1 + ε(h, p^k)) / 2^r`, where `Δ(h, p) = 2^codim`
//! of the coincidence pattern of the partial sums `t_i` mod `p`.

pub mod lattice;
pub mod partition;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::correlations::region::partial_sums_mod;
use crate::correlations::{BoxRegion, LocalTable, OffsetVector};
use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::{FactoredModulus, PrimePower};

pub use lattice::{
    count_lattice_points, enumerate_composite_lattices, CompositeLattice, LatticeCount,
    LatticeFilter,
};
pub use partition::{all_partitions, SetPartition};

/// Largest `r` accepted by [`mobius_coefficients`] (Bell(8) = 4140 partitions).
pub const MAX_DECOMPOSITION_R: usize = 8;

/// `2^{r - d}` with `d` the number of distinct partial sums mod `p`.
pub fn delta_prime(h: &OffsetVector, p: u64) -> u64 {
    delta_of_offsets(h.components(), p)
}

pub(crate) fn delta_of_offsets(h: &[i64], p: u64) -> u64 {
    let mut t = partial_sums_mod(h, p);
    let r = t.len();
    t.sort_unstable();
    t.dedup();
    1 << (r - t.len())
}

/// `ε` from a known count: `N 2^r / (Δ m) - 1`.
pub fn epsilon_from_count(n: u64, delta: u64, r: usize, m: u64) -> BigRational {
    let num = BigInt::from(n) << r;
    let den = BigInt::from(delta) * BigInt::from(m);
    BigRational::new(num, den) - BigRational::one()
}

pub fn epsilon(h: &OffsetVector, pk: PrimePower) -> Result<BigRational> {
    let n = crate::correlations::count_solutions_brute(h, pk)?;
    let p = pk.prime_u64()?;
    Ok(epsilon_from_count(n, delta_prime(h, p), h.r(), pk.modulus_u64()?))
}

/// `Δ(h, c) = prod_{p | c} Δ(h, p)` for squarefree `c`; 1 for `c = 1`.
pub fn delta_composite(h: &OffsetVector, c: &FactoredModulus) -> Result<u128> {
    c.require_squarefree()?;
    let mut acc = 1u128;
    for p in c.primes() {
        acc *= delta_prime(h, p as u64) as u128;
    }
    Ok(acc)
}

/// `ε(h, C) = prod_{p^k || C} ε(h, p^k)`; 1 for `C = 1`.
pub fn epsilon_composite(h: &OffsetVector, ctilde: &FactoredModulus) -> Result<BigRational> {
    let mut acc = BigRational::one();
    for &pk in ctilde.factors() {
        acc *= epsilon(h, pk)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionEntry {
    pub partition: SetPartition,
    pub codim: usize,
    pub lambda: i64,
}

/// `λ` for every set partition of `{0..r-1}`, finest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaDecomposition {
    r: usize,
    entries: Vec<DecompositionEntry>,
}

impl DeltaDecomposition {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn entries(&self) -> &[DecompositionEntry] {
        &self.entries
    }

    pub fn lambda_of(&self, p: &SetPartition) -> Option<i64> {
        self.entries
            .iter()
            .find(|e| &e.partition == p)
            .map(|e| e.lambda)
    }

    /// `sum_pi λ(pi) [t ∈ L_pi]` for partial sums `t` already reduced mod `p`.
    pub fn evaluate(&self, t: &[u64]) -> i64 {
        self.entries
            .iter()
            .filter(|e| e.partition.holds_on(t))
            .map(|e| e.lambda)
            .sum()
    }

    /// A copy with one coefficient shifted; used to exercise the checks.
    pub fn perturbed(&self, index: usize, by: i64) -> Self {
        let mut out = self.clone();
        if let Some(e) = out.entries.get_mut(index) {
            e.lambda += by;
        }
        out
    }
}

/// `λ(M) = 2^{codim M} - sum_{L strictly finer than M} λ(L)`.
pub fn mobius_coefficients(r: usize) -> Result<DeltaDecomposition> {
    if !(2..=MAX_DECOMPOSITION_R).contains(&r) {
        return Err(Error::range("r", r, format!("must lie in 2..={MAX_DECOMPOSITION_R}")));
    }
    let mut parts = all_partitions(r);
    parts.sort_by(|a, b| {
        b.block_count()
            .cmp(&a.block_count())
            .then_with(|| a.labels().cmp(b.labels()))
    });
    let mut entries: Vec<DecompositionEntry> = Vec::with_capacity(parts.len());
    for m in parts {
        let finer: i64 = entries
            .iter()
            .filter(|e| e.partition.refines(&m))
            .map(|e| e.lambda)
            .sum();
        let codim = m.codim();
        entries.push(DecompositionEntry {
            lambda: (1i64 << codim) - finer,
            codim,
            partition: m,
        });
    }
    Ok(DeltaDecomposition { r, entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InversionMismatch {
    pub p: u64,
    pub h: Vec<i64>,
    pub expected: u64,
    pub got: i64,
}

/// Checks `sum_pi λ(pi) [h ∈ L_pi] = Δ(h, p)` for every `h mod p`. Returns
/// the first mismatch, if any.
pub fn check_inversion(dec: &DeltaDecomposition, p: u64) -> Option<InversionMismatch> {
    let dim = dec.r() - 1;
    let total = (p as u128).pow(dim as u32);
    let mut h = vec![0i64; dim];
    for _ in 0..total {
        let t = partial_sums_mod(&h, p);
        let got = dec.evaluate(&t);
        let expected = delta_of_offsets(&h, p);
        if got != expected as i64 {
            return Some(InversionMismatch {
                p,
                h,
                expected,
                got,
            });
        }
        for x in h.iter_mut() {
            *x += 1;
            if (*x as u64) < p {
                break;
            }
            *x = 0;
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct HenselDefect {
    pub p: u64,
    pub a: u32,
    pub b: u32,
    pub r: usize,
    /// `max_h |N(h,p^b) - p^{b-a} N(h,p^a)| / p^{b-a}`
    #[serde(serialize_with = "exact::serialize")]
    pub defect: BigRational,
    pub defect_f64: f64,
    pub argmax: Vec<i64>,
}

pub fn hensel_defect(p: u64, a: u32, b: u32, r: usize) -> Result<HenselDefect> {
    hensel_defect_capped(p, a, b, r, crate::correlations::table::DEFAULT_TABLE_CAP)
}

pub fn hensel_defect_capped(p: u64, a: u32, b: u32, r: usize, cap: u64) -> Result<HenselDefect> {
    if a < 1 || b < a {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= a <= b, got a = {a}, b = {b}"
        )));
    }
    let high = LocalTable::build(PrimePower::new(p as u128, b)?, r, cap)?;
    let low = LocalTable::build(PrimePower::new(p as u128, a)?, r, cap)?;
    let lift = (p as u128).pow(b - a);
    let mut best = 0u128;
    let mut argmax = vec![0i64; r - 1];
    for i in 0..high.len() {
        let nb = high.get_index(i) as u128;
        let h = high.offsets_of(i);
        let na = low.get(&h) as u128 * lift;
        let d = nb.abs_diff(na);
        if d > best {
            best = d;
            argmax = h;
        }
    }
    let defect = BigRational::new(BigInt::from(best), BigInt::from(lift));
    Ok(HenselDefect {
        p,
        a,
        b,
        r,
        defect_f64: exact::to_f64(&defect),
        defect,
        argmax,
    })
}

/// Caps the lattice expansion in [`delta_sum_over_region`].
pub const MAX_EXPANDED_LATTICES: u128 = 1 << 16;

#[derive(Debug, Clone, Serialize)]
pub struct DeltaSum {
    /// `sum_{h ∈ sC} Δ(h, q)` evaluated pointwise.
    pub direct: u128,
    /// The same sum as `sum_L λ(L) #(sC ∩ L)`, when the lattice set is small.
    pub expanded: Option<i128>,
    pub lattices: Option<usize>,
    pub num_points: u128,
    /// `direct / s^{r-1}`
    pub ratio_to_scale: f64,
}

pub fn delta_sum_over_region(
    q: &FactoredModulus,
    s: &BigRational,
    c: &BoxRegion,
) -> Result<DeltaSum> {
    q.require_squarefree()?;
    let r = c.r();
    let primes: Vec<u64> = q.primes().map(|p| p as u64).collect();
    let sc = c.scaled(s);
    let num_points = sc.integer_point_count()?;
    let mut direct = 0u128;
    if let Some(ranges) = sc.integer_ranges()? {
        lattice::for_each_point(&ranges, |h| {
            direct += primes
                .iter()
                .map(|&p| delta_of_offsets(h, p) as u128)
                .product::<u128>();
        });
    }

    let dec = mobius_coefficients(r)?;
    let per_prime = dec
        .entries()
        .iter()
        .filter(|e| e.lambda != 0 && e.codim > 0)
        .count() as u128;
    let lattice_total = (per_prime + 1).checked_pow(primes.len() as u32);
    let (expanded, lattices) = match lattice_total {
        Some(n) if n <= MAX_EXPANDED_LATTICES => {
            let ls = lattice::enumerate_with(
                q,
                &dec,
                &LatticeFilter {
                    include_trivial: true,
                    ..Default::default()
                },
            )?;
            let mut acc = 0i128;
            if let Some(ranges) = sc.integer_ranges()? {
                for l in &ls {
                    acc += l.lambda as i128 * lattice::count_in_ranges(l, &ranges) as i128;
                }
            }
            (Some(acc), Some(ls.len()))
        }
        _ => (None, None),
    };
    let scale = exact::to_f64(s).powi(r as i32 - 1);
    Ok(DeltaSum {
        direct,
        expanded,
        lattices,
        num_points,
        ratio_to_scale: direct as f64 / scale,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimeHit {
    pub p: u64,
    /// Does the single-prime lattice family at `p` meet `sC`?
    pub meets: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmptyIntersection {
    /// `s^{r(r-1)/2}`
    pub threshold: f64,
    pub per_prime: Vec<PrimeHit>,
    /// Smallest and largest support of a non-trivial lattice meeting `sC`.
    pub min_supp_hit: Option<u128>,
    pub max_supp_hit: Option<u128>,
    /// Points of `sC` whose degenerate support exceeds the threshold.
    pub points_above_threshold: u128,
    /// `max_supp_hit / threshold`: the implied constant the scan requires.
    pub implied_constant: Option<f64>,
}

/// Scans `sC` once. A point `h` lies in some non-trivial lattice supported on
/// `g` exactly when the partial sums of `h` are degenerate mod every `p | g`
/// (a one-merge partition, which has `λ = 1`, always fits), so the largest
/// support met is the largest product of degenerate primes.
pub fn empty_intersection_check(
    q: &FactoredModulus,
    s: &BigRational,
    c: &BoxRegion,
) -> Result<EmptyIntersection> {
    q.require_squarefree()?;
    let r = c.r();
    let primes: Vec<u64> = q.primes().map(|p| p as u64).collect();
    let threshold = exact::pow(s, (r * (r - 1) / 2) as u32);
    let mut meets = vec![false; primes.len()];
    let mut min_hit: Option<u128> = None;
    let mut max_hit: Option<u128> = None;
    let mut above = 0u128;
    if let Some(ranges) = c.scaled(s).integer_ranges()? {
        lattice::for_each_point(&ranges, |h| {
            let mut g = 1u128;
            for (i, &p) in primes.iter().enumerate() {
                if delta_of_offsets(h, p) > 1 {
                    meets[i] = true;
                    g *= p as u128;
                }
            }
            if g > 1 {
                let smallest = primes
                    .iter()
                    .find(|&&p| delta_of_offsets(h, p) > 1)
                    .copied()
                    .expect("g > 1") as u128;
                min_hit = Some(min_hit.map_or(smallest, |m| m.min(smallest)));
                max_hit = Some(max_hit.map_or(g, |m| m.max(g)));
                if exact::from_int(g) > threshold {
                    above += 1;
                }
            }
        });
    }
    let t = exact::to_f64(&threshold);
    Ok(EmptyIntersection {
        threshold: t,
        per_prime: primes
            .iter()
            .zip(&meets)
            .map(|(&p, &m)| PrimeHit { p, meets: m })
            .collect(),
        min_supp_hit: min_hit,
        max_supp_hit: max_hit,
        points_above_threshold: above,
        implied_constant: max_hit.map(|g| g as f64 / t),
    })
}

/// `max_h |ε(h, p^k)| sqrt(p)` over all `h mod p^k`, with the maximizing `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonEnvelope {
    pub pk: PrimePower,
    pub r: usize,
    #[serde(serialize_with = "exact::serialize")]
    pub max_abs_epsilon: BigRational,
    pub scaled: f64,
}

pub fn epsilon_envelope(pk: PrimePower, r: usize) -> Result<EpsilonEnvelope> {
    let table = LocalTable::build(pk, r, crate::correlations::table::DEFAULT_TABLE_CAP)?;
    let p = pk.prime_u64()?;
    let m = table.modulus();
    let mut best = BigRational::zero();
    for i in 0..table.len() {
        let h = table.offsets_of(i);
        let e = epsilon_from_count(table.get_index(i), delta_of_offsets(&h, p), r, m).abs();
        if e > best {
            best = e;
        }
    }
    Ok(EpsilonEnvelope {
        pk,
        r,
        scaled: exact::to_f64(&best) * (p as f64).sqrt(),
        max_abs_epsilon: best,
    })
}

/// Largest `log2 Δ(h, p)` over the full grid `h mod p`.
pub fn max_delta_exponent(p: u64, r: usize) -> u32 {
    let dim = r - 1;
    let mut h = vec![0i64; dim];
    let mut best = 0u32;
    for _ in 0..(p as u128).pow(dim as u32) {
        best = best.max(delta_of_offsets(&h, p).trailing_zeros());
        for x in h.iter_mut() {
            *x += 1;
            if (*x as u64) < p {
                break;
            }
            *x = 0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::count_solutions_brute;
    use crate::modulus::factor;

    fn h(v: &[i64]) -> OffsetVector {
        OffsetVector::new(v.to_vec()).unwrap()
    }

    fn pk(p: u128, a: u32) -> PrimePower {
        PrimePower::new(p, a).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_prime(&h(&[0]), 7), 2);
        assert_eq!(delta_prime(&h(&[3]), 7), 1);
        assert_eq!(delta_prime(&h(&[2, 3]), 5), 2);
        assert_eq!(delta_prime(&h(&[5, 5]), 5), 4);
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon(&h(&[1]), pk(7, 1)).unwrap(), exact::ratio(1, 7));
        assert_eq!(epsilon(&h(&[0]), pk(7, 1)).unwrap(), exact::ratio(1, 7));
        assert_eq!(epsilon(&h(&[3]), pk(3, 2)).unwrap(), exact::ratio(-1, 3));
    }

    #[test]
    fn composite_products() {
        assert_eq!(delta_composite(&h(&[5]), &FactoredModulus::one()).unwrap(), 1);
        assert_eq!(delta_composite(&h(&[0]), &factor(21).unwrap()).unwrap(), 4);
        assert!(delta_composite(&h(&[0]), &factor(12).unwrap()).is_err());
        assert_eq!(
            epsilon_composite(&h(&[3]), &factor(63).unwrap()).unwrap(),
            exact::ratio(-1, 3) * exact::ratio(1, 7)
        );
        assert_eq!(
            epsilon_composite(&h(&[3]), &FactoredModulus::one()).unwrap(),
            BigRational::one()
        );
    }

    #[test]
    fn epsilon_reconstructs_count() {
        for (p, a) in [(3u128, 2u32), (5, 1), (2, 3), (7, 1)] {
            let m = pk(p, a);
            for x in -6..6 {
                for y in -6..6 {
                    let hv = h(&[x, y]);
                    let n = count_solutions_brute(&hv, m).unwrap();
                    let e = epsilon(&hv, m).unwrap();
                    let d = delta_prime(&hv, p as u64);
                    let rebuilt = (e + BigRational::one())
                        * exact::from_int(d * m.modulus_u64().unwrap())
                        / exact::from_int(8);
                    assert_eq!(rebuilt, exact::from_int(n));
                }
            }
        }
    }

    #[test]
    fn lambda_small_r() {
        let d2 = mobius_coefficients(2).unwrap();
        assert_eq!(d2.lambda_of(&SetPartition::singletons(2)), Some(1));
        assert_eq!(d2.lambda_of(&SetPartition::merged(2)), Some(1));
        let d3 = mobius_coefficients(3).unwrap();
        for e in d3.entries() {
            let expected = if e.codim == 2 { 0 } else { 1 };
            assert_eq!(e.lambda, expected, "{}", e.partition);
        }
        assert_eq!(d3.entries()[0].partition, SetPartition::singletons(3));
        assert!(mobius_coefficients(1).is_err() && mobius_coefficients(9).is_err());
    }

    #[test]
    fn inversion_identity_holds() {
        for r in 2..=4 {
            let dec = mobius_coefficients(r).unwrap();
            for p in [2, 3, 5, 7] {
                assert_eq!(check_inversion(&dec, p), None, "r={r} p={p}");
            }
        }
    }

    #[test]
    fn perturbed_table_is_caught() {
        let dec = mobius_coefficients(3).unwrap().perturbed(1, 1);
        let bad = check_inversion(&dec, 5).expect("perturbation must show");
        assert_ne!(bad.got, bad.expected as i64);
    }

    #[test]
    fn delta_exponent_capped() {
        for r in 2..=4 {
            for p in [2u64, 3, 5] {
                assert!(max_delta_exponent(p, r) <= (r - 1) as u32);
            }
        }
        assert_eq!(max_delta_exponent(5, 3), 2);
    }

    #[test]
    fn hensel_against_brute() {
        let d = hensel_defect(3, 1, 2, 2).unwrap();
        let mut best = BigRational::zero();
        for x in 0..9 {
            let hv = h(&[x]);
            let nb = count_solutions_brute(&hv, pk(3, 2)).unwrap() as i64;
            let na = count_solutions_brute(&hv, pk(3, 1)).unwrap() as i64;
            let v = exact::ratio((nb - 3 * na).abs(), 3);
            if v > best {
                best = v;
            }
        }
        assert_eq!(d.defect, best);
        assert!(hensel_defect(5, 2, 2, 3).unwrap().defect.is_zero());
        assert!(hensel_defect(5, 2, 1, 2).is_err());
    }

    #[test]
    fn delta_sums() {
        let c = BoxRegion::unit_around_one(2);
        let d = delta_sum_over_region(&factor(7).unwrap(), &exact::ratio(7, 4), &c).unwrap();
        assert_eq!(d.direct, 2);
        assert_eq!(d.expanded, Some(2));

        let one = delta_sum_over_region(&FactoredModulus::one(), &exact::ratio(9, 2), &c).unwrap();
        assert_eq!(one.direct, c.scaled(&exact::ratio(9, 2)).integer_point_count().unwrap());

        let q = factor(105).unwrap();
        let s = crate::residues::mean_spacing(&q);
        let d = delta_sum_over_region(&q, &s, &c).unwrap();
        assert_eq!(d.expanded, Some(d.direct as i128));
        let c3 = BoxRegion::unit_around_one(3);
        let d = delta_sum_over_region(&factor(30).unwrap(), &exact::ratio(6, 1), &c3).unwrap();
        assert_eq!(d.expanded, Some(d.direct as i128));
    }

    #[test]
    fn empty_intersection_examples() {
        let c = BoxRegion::unit_around_one(2);
        let q = factor(210).unwrap();
        let s = crate::residues::mean_spacing(&q);
        let rep = empty_intersection_check(&q, &s, &c).unwrap();
        let top = exact::to_f64(&s) * 1.5;
        for hit in &rep.per_prime {
            assert_eq!(hit.meets, (hit.p as f64) <= top, "p = {}", hit.p);
        }
        let rep = empty_intersection_check(&factor(2).unwrap(), &exact::ratio(7, 4), &c).unwrap();
        assert!(rep.per_prime[0].meets);
        assert_eq!(rep.max_supp_hit, Some(2));
    }

    #[test]
    fn envelope_small() {
        let e = epsilon_envelope(pk(7, 1), 2).unwrap();
        assert_eq!(e.max_abs_epsilon, exact::ratio(1, 7));
    }
}
