//! Composite coincidence lattices `L = ∩_{p | supp} L_p` and their point counts.

use num_rational::BigRational;
use serde::Serialize;

use crate::correlations::region::partial_sums_mod;
use crate::correlations::Cuboid;
use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::{divisors, DivisorFilter, FactoredModulus};

use super::{mobius_coefficients, DeltaDecomposition, SetPartition};

/// One non-trivial partition per prime of the support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompositeLattice {
    pub assignment: Vec<(u64, SetPartition)>,
    pub supp: u128,
    pub disc: u128,
    pub lambda: i64,
}

impl CompositeLattice {
    /// `Z^{r-1}` itself.
    pub fn trivial() -> Self {
        CompositeLattice {
            assignment: Vec::new(),
            supp: 1,
            disc: 1,
            lambda: 1,
        }
    }

    pub fn from_assignment(
        assignment: Vec<(u64, SetPartition)>,
        decomposition: &DeltaDecomposition,
    ) -> Result<Self> {
        let mut supp = 1u128;
        let mut disc = 1u128;
        let mut lambda = 1i64;
        let mut primes: Vec<u64> = assignment.iter().map(|a| a.0).collect();
        primes.sort_unstable();
        primes.dedup();
        if primes.len() != assignment.len() {
            return Err(Error::InvalidArgument("prime assigned twice".into()));
        }
        for (p, part) in &assignment {
            if part.size() != decomposition.r() {
                return Err(Error::Dimension {
                    expected: decomposition.r(),
                    got: part.size(),
                });
            }
            if part.is_singletons() {
                return Err(Error::InvalidArgument(format!(
                    "prime {p} carries the trivial partition"
                )));
            }
            let over = || Error::cap("lattice discriminant", "more than 128 bits", u128::MAX);
            supp = supp.checked_mul(*p as u128).ok_or_else(over)?;
            disc = disc
                .checked_mul((*p as u128).checked_pow(part.codim() as u32).ok_or_else(over)?)
                .ok_or_else(over)?;
            lambda *= decomposition.lambda_of(part).expect("partition of matching size");
        }
        let mut assignment = assignment;
        assignment.sort_by_key(|a| a.0);
        Ok(CompositeLattice {
            assignment,
            supp,
            disc,
            lambda,
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.assignment.is_empty()
    }

    /// `h ∈ L`: the partition's t-equalities hold modulo each assigned prime.
    pub fn contains(&self, h: &[i64]) -> bool {
        self.assignment
            .iter()
            .all(|(p, part)| part.holds_on(&partial_sums_mod(h, *p)))
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.assignment.iter().map(|a| a.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LatticeFilter {
    pub max_supp: Option<u128>,
    pub max_disc: Option<u128>,
    /// Keep the trivial lattice `Z^{r-1}` (supp = 1).
    pub include_trivial: bool,
}

/// All composite lattices for squarefree `q` with `lambda != 0`, ordered by
/// support and then by assignment.
pub fn enumerate_composite_lattices(
    q: &FactoredModulus,
    r: usize,
    filter: &LatticeFilter,
) -> Result<Vec<CompositeLattice>> {
    let dec = mobius_coefficients(r)?;
    enumerate_with(q, &dec, filter)
}

pub fn enumerate_with(
    q: &FactoredModulus,
    dec: &DeltaDecomposition,
    filter: &LatticeFilter,
) -> Result<Vec<CompositeLattice>> {
    q.factors(); // squarefree checked by divisors()
    let nontrivial: Vec<(&SetPartition, i64)> = dec
        .entries()
        .iter()
        .filter(|e| !e.partition.is_singletons() && e.lambda != 0)
        .map(|e| (&e.partition, e.lambda))
        .collect();
    let mut dfilter = DivisorFilter::none();
    if let Some(x) = filter.max_supp {
        dfilter = dfilter.max_value(x);
    }
    let mut out = Vec::new();
    for g in divisors(q, &dfilter)? {
        if g.omega() == 0 {
            if filter.include_trivial {
                out.push(CompositeLattice::trivial());
            }
            continue;
        }
        let primes: Vec<u64> = g
            .factors()
            .iter()
            .map(|f| f.prime_u64())
            .collect::<Result<_>>()?;
        // odometer over one partition choice per prime
        let mut choice = vec![0usize; primes.len()];
        if nontrivial.is_empty() {
            continue;
        }
        loop {
            let assignment: Vec<(u64, SetPartition)> = primes
                .iter()
                .zip(&choice)
                .map(|(&p, &c)| (p, nontrivial[c].0.clone()))
                .collect();
            let l = CompositeLattice::from_assignment(assignment, dec)?;
            if filter.max_disc.is_none_or(|d| l.disc <= d) {
                out.push(l);
            }
            let mut i = 0;
            loop {
                if i == choice.len() {
                    break;
                }
                choice[i] += 1;
                if choice[i] < nontrivial.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeCount {
    pub count: u128,
    /// `vol(region) / disc(L)`
    #[serde(serialize_with = "exact::serialize")]
    pub predicted: BigRational,
    #[serde(serialize_with = "exact::serialize")]
    pub residual: BigRational,
}

/// Exact `#(L ∩ region)` by scanning the integer grid, with the volume
/// prediction `vol(region) / disc(L)`.
pub fn count_lattice_points(l: &CompositeLattice, region: &Cuboid) -> Result<LatticeCount> {
    let count = match region.integer_ranges()? {
        None => 0,
        Some(ranges) => count_in_ranges(l, &ranges),
    };
    let predicted = region.volume() / exact::from_int(l.disc);
    Ok(LatticeCount {
        count,
        residual: exact::from_int(count) - &predicted,
        predicted,
    })
}

pub(crate) fn count_in_ranges(l: &CompositeLattice, ranges: &[(i64, i64)]) -> u128 {
    let mut count = 0u128;
    for_each_point(ranges, |h| {
        if l.contains(h) {
            count += 1;
        }
    });
    count
}

/// Visits every integer point of the box, first coordinate fastest.
pub(crate) fn for_each_point(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return;
    }
    let mut h: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&h);
        let mut i = 0;
        loop {
            if i == h.len() {
                return;
            }
            if h[i] < ranges[i].1 {
                h[i] += 1;
                break;
            }
            h[i] = ranges[i].0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::factor;

    #[test]
    fn single_prime_r2() {
        let ls = enumerate_composite_lattices(&factor(7).unwrap(), 2, &LatticeFilter::default())
            .unwrap();
        assert_eq!(ls.len(), 1);
        assert_eq!((ls[0].supp, ls[0].disc, ls[0].lambda), (7, 7, 1));
        assert!(ls[0].contains(&[14]) && !ls[0].contains(&[3]));
    }

    #[test]
    fn six_r2() {
        let ls = enumerate_composite_lattices(&factor(6).unwrap(), 2, &LatticeFilter::default())
            .unwrap();
        let v: Vec<(u128, u128, i64)> = ls.iter().map(|l| (l.supp, l.disc, l.lambda)).collect();
        assert_eq!(v, vec![(2, 2, 1), (3, 3, 1), (6, 6, 1)]);
    }

    #[test]
    fn r3_drops_zero_coefficients() {
        let ls = enumerate_composite_lattices(&factor(30).unwrap(), 3, &LatticeFilter::default())
            .unwrap();
        let merged = SetPartition::merged(3);
        assert!(ls.iter().all(|l| l.assignment.iter().all(|(_, p)| *p != merged)));
        // three one-merge partitions per prime: 3 + 3 + 3 + 9 + 9 + 9 + 27
        assert_eq!(ls.len(), 63);
    }

    #[test]
    fn point_count_examples() {
        let dec = mobius_coefficients(2).unwrap();
        let l = CompositeLattice::from_assignment(vec![(3, SetPartition::merged(2))], &dec).unwrap();
        let region = Cuboid::from_ratios(&[((5, 1), (16, 1))]).unwrap();
        let c = count_lattice_points(&l, &region).unwrap();
        assert_eq!(c.count, 4);
        assert_eq!(c.predicted, exact::ratio(11, 3));

        let c = count_lattice_points(&CompositeLattice::trivial(), &region).unwrap();
        assert_eq!(c.count, 12);
        assert_eq!(c.predicted, exact::ratio(11, 1));

        let dec3 = mobius_coefficients(3).unwrap();
        let p01 = SetPartition::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap();
        let l = CompositeLattice::from_assignment(vec![(5, p01)], &dec3).unwrap();
        let region = Cuboid::from_ratios(&[((0, 1), (25, 1)), ((0, 1), (25, 1))]).unwrap();
        let c = count_lattice_points(&l, &region).unwrap();
        let mut brute = 0;
        for h1 in 0..=25i64 {
            for _h2 in 0..=25i64 {
                if h1 % 5 == 0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(c.count, brute);
        assert_eq!(c.count, 156);
    }

    #[test]
    fn rejects_trivial_component() {
        let dec = mobius_coefficients(2).unwrap();
        assert!(
            CompositeLattice::from_assignment(vec![(3, SetPartition::singletons(2))], &dec).is_err()
        );
    }
}
