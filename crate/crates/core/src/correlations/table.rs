//! Per-prime-power tables of `N(h, p^alpha)`.

use crate::error::{Error, Result};
use crate::modulus::{FactoredModulus, PrimePower};
use crate::residues::squares_mod_pk;

use super::region::partial_sums_mod;

/// Default cap on entries in one dense local table (`(p^alpha)^(r-1)`).
pub const DEFAULT_TABLE_CAP: u64 = 1 << 24;

/// `N(h, p^alpha)` for every `h` in `(Z/p^alpha)^{r-1}`, indexed mixed-radix
/// with `h_1` least significant.
#[derive(Debug, Clone)]
pub struct LocalTable {
    pk: PrimePower,
    m: u64,
    r: usize,
    counts: Vec<u32>,
}

impl LocalTable {
    /// Builds the table by walking every `r`-tuple of squares
    /// `(s_1, ..., s_r)` and bumping the entry of its difference vector.
    /// Costs `N_{p^alpha}^r`.
    pub fn build(pk: PrimePower, r: usize, cap: u64) -> Result<Self> {
        if r < 2 {
            return Err(Error::range("correlation order r", r, "must be at least 2"));
        }
        let m = pk.modulus_u64()?;
        let entries = (m as u128).checked_pow((r - 1) as u32).unwrap_or(u128::MAX);
        if entries > cap as u128 {
            return Err(Error::cap("local table entries", entries, cap));
        }
        let squares = squares_mod_pk(pk)?;
        let mut counts = vec![0u32; entries as usize];
        let strides: Vec<u64> = (0..r - 1).map(|i| m.pow(i as u32)).collect();
        // depth-first over s_2..s_r with the running index
        fn walk(
            depth: usize,
            prev: u64,
            index: u64,
            squares: &[u64],
            strides: &[u64],
            m: u64,
            counts: &mut [u32],
        ) {
            if depth == strides.len() {
                counts[index as usize] += 1;
                return;
            }
            for &s in squares {
                let d = if s >= prev { s - prev } else { s + m - prev };
                walk(depth + 1, s, index + d * strides[depth], squares, strides, m, counts);
            }
        }
        for &s1 in &squares {
            walk(0, s1, 0, &squares, &strides, m, &mut counts);
        }
        Ok(LocalTable { pk, m, r, counts })
    }

    pub fn prime_power(&self) -> PrimePower {
        self.pk
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn index_of(&self, h: &[i64]) -> usize {
        let mut idx = 0u64;
        let mut stride = 1u64;
        for &x in h {
            idx += (x as i128).rem_euclid(self.m as i128) as u64 * stride;
            stride *= self.m;
        }
        idx as usize
    }

    pub fn get(&self, h: &[i64]) -> u64 {
        self.counts[self.index_of(h)] as u64
    }

    /// Entry at a raw mixed-radix index.
    pub fn get_index(&self, i: usize) -> u64 {
        self.counts[i] as u64
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Decodes a mixed-radix index back into `h` with components in `[0, m)`.
    pub fn offsets_of(&self, mut i: usize) -> Vec<i64> {
        let mut h = Vec::with_capacity(self.r - 1);
        for _ in 0..self.r - 1 {
            h.push((i as u64 % self.m) as i64);
            i /= self.m as usize;
        }
        h
    }
}

/// Counts `#{x mod m : x + t_i is a square for every i}` by scanning `x`.
#[derive(Debug, Clone)]
struct BruteCounter {
    m: u64,
    is_square: Vec<bool>,
}

impl BruteCounter {
    fn new(pk: PrimePower) -> Result<Self> {
        let m = pk.modulus_u64()?;
        let mut is_square = vec![false; m as usize];
        for s in squares_mod_pk(pk)? {
            is_square[s as usize] = true;
        }
        Ok(BruteCounter { m, is_square })
    }

    fn count(&self, h: &[i64]) -> u64 {
        let t = partial_sums_mod(h, self.m);
        let m = self.m;
        (0..m)
            .filter(|&x| {
                t.iter().all(|&ti| {
                    let y = x + ti;
                    self.is_square[(if y >= m { y - m } else { y }) as usize]
                })
            })
            .count() as u64
    }
}

#[derive(Debug, Clone)]
enum LocalCounter {
    Table(LocalTable),
    Brute(BruteCounter),
}

impl LocalCounter {
    fn count(&self, h: &[i64]) -> u64 {
        match self {
            LocalCounter::Table(t) => t.get(h),
            LocalCounter::Brute(b) => b.count(h),
        }
    }
}

/// Evaluates `N(h, Q) = prod_p N(h, p^alpha)` for many `h`, with a dense
/// table per prime power whenever it fits under the cap.
#[derive(Debug, Clone)]
pub struct NEvaluator {
    r: usize,
    locals: Vec<LocalCounter>,
}

impl NEvaluator {
    pub fn new(q: &FactoredModulus, r: usize) -> Result<Self> {
        Self::with_cap(q, r, DEFAULT_TABLE_CAP)
    }

    pub fn with_cap(q: &FactoredModulus, r: usize, cap: u64) -> Result<Self> {
        if r < 2 {
            return Err(Error::range("correlation order r", r, "must be at least 2"));
        }
        let locals = q
            .factors()
            .iter()
            .map(|&pk| match LocalTable::build(pk, r, cap) {
                Ok(t) => Ok(LocalCounter::Table(t)),
                Err(Error::CapExceeded { .. }) => BruteCounter::new(pk).map(LocalCounter::Brute),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NEvaluator { r, locals })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn eval(&self, h: &[i64]) -> u64 {
        debug_assert_eq!(h.len() + 1, self.r);
        let mut acc = 1u64;
        for l in &self.locals {
            let v = l.count(h);
            if v == 0 {
                return 0;
            }
            acc *= v;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::count_solutions_brute;
    use crate::correlations::OffsetVector;

    #[test]
    fn table_matches_x_scan() {
        for (p, a) in [(2u128, 3u32), (3, 2), (5, 1), (7, 1), (2, 1)] {
            let pk = PrimePower::new(p, a).unwrap();
            for r in 2..=3 {
                let t = LocalTable::build(pk, r, DEFAULT_TABLE_CAP).unwrap();
                for i in 0..t.len() {
                    let h = t.offsets_of(i);
                    let brute = count_solutions_brute(&OffsetVector::new(h.clone()).unwrap(), pk)
                        .unwrap();
                    assert_eq!(t.get_index(i), brute, "h={h:?} mod {p}^{a}");
                    assert_eq!(t.index_of(&h), i);
                }
            }
        }
    }

    #[test]
    fn evaluator_falls_back_past_the_cap() {
        let q = crate::modulus::factor(7 * 9).unwrap();
        let dense = NEvaluator::new(&q, 3).unwrap();
        let brute = NEvaluator::with_cap(&q, 3, 1).unwrap();
        for h1 in -5..30 {
            for h2 in -5..30 {
                assert_eq!(dense.eval(&[h1, h2]), brute.eval(&[h1, h2]));
            }
        }
    }
}
