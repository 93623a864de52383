//! Factored moduli and the multiplicative quantities built on them.
//!
//! A [`FactoredModulus`] keeps `Q` as an ordered list of prime powers and
//! caches `Q`, its radical and `omega(Q)`. Everything downstream (square
//! counts, correlation tables, truncation) walks this list one prime at a
//! time, so the factorization is the canonical representation of a modulus.

pub mod arith;
pub mod factor;

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use arith::inverse_mod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PrimePower {
    pub p: u128,
    pub alpha: u32,
}

impl PrimePower {
    pub fn new(p: u128, alpha: u32) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::ZeroExponent(alpha));
        }
        if !factor::is_prime(p) {
            return Err(Error::CompositeBase(p));
        }
        Ok(PrimePower { p, alpha })
    }

    pub fn value(&self) -> BigUint {
        BigUint::from(self.p).pow(self.alpha)
    }

    /// `p^alpha` as a machine word, for the enumeration paths.
    pub fn modulus_u64(&self) -> Result<u64> {
        let p = u64::try_from(self.p).map_err(|_| Error::cap("prime", self.p, u64::MAX))?;
        p.checked_pow(self.alpha)
            .ok_or_else(|| Error::cap("prime power", self, u64::MAX))
    }

    pub fn prime_u64(&self) -> Result<u64> {
        u64::try_from(self.p).map_err(|_| Error::cap("prime", self.p, u64::MAX))
    }

    pub fn with_exponent(&self, alpha: u32) -> Self {
        PrimePower { p: self.p, alpha }
    }
}

impl fmt::Display for PrimePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alpha == 1 {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{}^{}", self.p, self.alpha)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactoredModulus {
    factors: Vec<PrimePower>,
    value: BigUint,
    rad: BigUint,
}

impl FactoredModulus {
    /// The modulus 1.
    pub fn one() -> Self {
        FactoredModulus {
            factors: Vec::new(),
            value: BigUint::one(),
            rad: BigUint::one(),
        }
    }

    /// Builds a modulus from prime powers given in any order. Primes must be
    /// distinct and exponents positive.
    pub fn from_prime_powers(mut factors: Vec<PrimePower>) -> Result<Self> {
        for f in &factors {
            if f.alpha == 0 {
                return Err(Error::ZeroExponent(0));
            }
            if !factor::is_prime(f.p) {
                return Err(Error::CompositeBase(f.p));
            }
        }
        factors.sort_by_key(|f| f.p);
        for w in factors.windows(2) {
            if w[0].p == w[1].p {
                return Err(Error::RepeatedPrime(w[0].p));
            }
        }
        let value = factors.iter().map(PrimePower::value).product();
        let rad = factors.iter().map(|f| BigUint::from(f.p)).product();
        Ok(FactoredModulus {
            factors,
            value,
            rad,
        })
    }

    /// Squarefree modulus from a list of distinct primes.
    pub fn from_primes(primes: &[u128]) -> Result<Self> {
        Self::from_prime_powers(primes.iter().map(|&p| PrimePower { p, alpha: 1 }).collect())
    }

    /// Product of the first `k` primes.
    pub fn primorial(k: usize) -> Self {
        let primes: Vec<u128> = (2u128..)
            .filter(|&n| factor::is_prime(n))
            .take(k)
            .collect();
        Self::from_primes(&primes).expect("distinct primes")
    }

    pub fn factors(&self) -> &[PrimePower] {
        &self.factors
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn rad(&self) -> &BigUint {
        &self.rad
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|f| f.alpha == 1)
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|f| f.p)
    }

    /// The squarefree kernel `q = rad(Q)` as a factored modulus.
    pub fn radical(&self) -> FactoredModulus {
        FactoredModulus {
            factors: self.factors.iter().map(|f| f.with_exponent(1)).collect(),
            value: self.rad.clone(),
            rad: self.rad.clone(),
        }
    }

    pub fn to_u64(&self) -> Result<u64> {
        self.value
            .to_u64()
            .ok_or_else(|| Error::cap("modulus", &self.value, u64::MAX))
    }

    pub fn to_u128(&self) -> Result<u128> {
        self.value
            .to_u128()
            .ok_or_else(|| Error::cap("modulus", &self.value, u128::MAX))
    }

    pub fn exponent_of(&self, p: u128) -> u32 {
        self.factors
            .iter()
            .find(|f| f.p == p)
            .map_or(0, |f| f.alpha)
    }

    /// `C = prod_{p|c} p^{alpha_p}` for a squarefree divisor `c` of `rad(Q)`.
    pub fn restrict_to(&self, c: &FactoredModulus) -> Result<FactoredModulus> {
        let mut out = Vec::with_capacity(c.omega());
        for p in c.primes() {
            let alpha = self.exponent_of(p);
            if alpha == 0 {
                return Err(Error::InvalidArgument(format!("{p} does not divide {self}")));
            }
            out.push(PrimePower { p, alpha });
        }
        FactoredModulus::from_prime_powers(out)
    }

    pub(crate) fn require_squarefree(&self) -> Result<()> {
        if self.is_squarefree() {
            Ok(())
        } else {
            Err(Error::NotSquarefree(self.to_string()))
        }
    }
}

impl fmt::Display for FactoredModulus {
    /// Canonical `p^a*q*...` form; `1` for the empty product.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, pk) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{pk}")?;
        }
        Ok(())
    }
}

impl Serialize for FactoredModulus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn factor(n: u128) -> Result<FactoredModulus> {
    if n == 0 {
        return Err(Error::ZeroModulus);
    }
    let primes = factor::prime_factors(n);
    let mut factors: Vec<PrimePower> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some(last) if last.p == p => last.alpha += 1,
            _ => factors.push(PrimePower { p, alpha: 1 }),
        }
    }
    FactoredModulus::from_prime_powers(factors)
}

/// The unique `x` in `[0, Q)` with `x = r_i mod p_i^{alpha_i}` for every part.
pub fn crt_combine(parts: &[(u128, PrimePower)]) -> Result<u128> {
    let mut seen: Vec<u128> = parts.iter().map(|(_, pk)| pk.p).collect();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::RepeatedPrime(w[0]));
    }
    let mut x = 0u128;
    let mut m = 1u128;
    for &(r, pk) in parts {
        let mk = pk
            .value()
            .to_u128()
            .ok_or_else(|| Error::cap("prime power", pk, u128::MAX))?;
        if r >= mk {
            return Err(Error::range("residue", r, format!("must be below {mk}")));
        }
        let new_m = m
            .checked_mul(mk)
            .ok_or_else(|| Error::cap("CRT modulus", "more than 128 bits", u128::MAX))?;
        // x + m * ((r - x) * m^{-1} mod mk)
        let inv = inverse_mod(m % mk, mk).expect("coprime moduli");
        let diff = (r + mk - x % mk) % mk;
        let k = arith::mul_mod(diff, inv, mk);
        x += arith::mul_mod(m, k, new_m);
        m = new_m;
    }
    Ok(x)
}

/// `sigma(q) = prod_{p|q} (1 + 1/p)` as an exact rational.
pub fn sigma(q: &FactoredModulus) -> Result<BigRational> {
    q.require_squarefree()?;
    Ok(q.primes()
        .map(|p| BigRational::new((p + 1).into(), p.into()))
        .fold(BigRational::one(), |acc, x| acc * x))
}

/// `F(q, t) = sum_{p|q} p^{-t}`.
pub fn big_f(q: &FactoredModulus, t: f64) -> Result<f64> {
    q.require_squarefree()?;
    if !(t > 0.0) {
        return Err(Error::range("exponent t", t, "must be positive"));
    }
    Ok(q.primes().map(|p| (p as f64).powf(-t)).sum())
}

/// Bounds applied while enumerating squarefree divisors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DivisorFilter {
    pub max_value: Option<BigUint>,
    pub min_value: Option<BigUint>,
    pub max_omega: Option<usize>,
    pub min_omega: Option<usize>,
}

impl DivisorFilter {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn max_value(mut self, x: impl Into<BigUint>) -> Self {
        self.max_value = Some(x.into());
        self
    }

    pub fn min_value(mut self, x: impl Into<BigUint>) -> Self {
        self.min_value = Some(x.into());
        self
    }

    pub fn max_omega(mut self, k: usize) -> Self {
        self.max_omega = Some(k);
        self
    }

    pub fn min_omega(mut self, k: usize) -> Self {
        self.min_omega = Some(k);
        self
    }

    fn accepts(&self, c: &FactoredModulus) -> bool {
        self.max_value.as_ref().is_none_or(|x| c.value() <= x)
            && self.min_value.as_ref().is_none_or(|x| c.value() >= x)
            && self.max_omega.is_none_or(|k| c.omega() <= k)
            && self.min_omega.is_none_or(|k| c.omega() >= k)
    }
}

/// Squarefree divisors of `q` passing `filter`, in increasing numeric order.
pub fn divisors(q: &FactoredModulus, filter: &DivisorFilter) -> Result<Vec<FactoredModulus>> {
    q.require_squarefree()?;
    if q.omega() > 40 {
        return Err(Error::cap("divisor enumeration (omega)", q.omega(), 40));
    }
    let primes: Vec<u128> = q.primes().collect();
    let mut out = Vec::new();
    // subsets are pruned early when a value cap is present: primes are sorted,
    // so a prefix exceeding the cap cannot be extended
    let mut stack: Vec<(usize, Vec<u128>, BigUint)> = vec![(0, Vec::new(), BigUint::one())];
    while let Some((start, chosen, value)) = stack.pop() {
        let c = FactoredModulus {
            factors: chosen.iter().map(|&p| PrimePower { p, alpha: 1 }).collect(),
            rad: value.clone(),
            value: value.clone(),
        };
        if filter.accepts(&c) {
            out.push(c);
        }
        if filter.max_omega.is_some_and(|k| chosen.len() >= k) {
            continue;
        }
        for (i, &p) in primes.iter().enumerate().skip(start) {
            let next = &value * p;
            if filter.max_value.as_ref().is_some_and(|x| &next > x) {
                break;
            }
            let mut ch = chosen.clone();
            ch.push(p);
            stack.push((i + 1, ch, next));
        }
    }
    out.sort_by(|a, b| a.value().cmp(b.value()));
    Ok(out)
}

/// Convenience: divisors as machine words.
pub fn divisor_values(q: &FactoredModulus, filter: &DivisorFilter) -> Result<Vec<u128>> {
    divisors(q, filter)?
        .iter()
        .map(|c| c.to_u128())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(n: u128) -> FactoredModulus {
        factor(n).unwrap()
    }

    #[test]
    fn factor_examples() {
        let f = fm(60);
        assert_eq!(
            f.factors(),
            &[
                PrimePower { p: 2, alpha: 2 },
                PrimePower { p: 3, alpha: 1 },
                PrimePower { p: 5, alpha: 1 }
            ]
        );
        assert_eq!(f.omega(), 3);
        assert_eq!(f.rad(), &BigUint::from(30u32));

        let one = fm(1);
        assert!(one.factors().is_empty());
        assert_eq!(one.value(), &BigUint::one());
        assert_eq!(one.omega(), 0);

        let f = fm(9_699_690);
        assert_eq!(f.primes().collect::<Vec<_>>(), vec![2, 3, 5, 7, 11, 13, 17, 19]);
        assert!(f.is_squarefree());
        assert_eq!(f.omega(), 8);

        assert_eq!(factor(0), Err(Error::ZeroModulus));
    }

    #[test]
    fn factor_round_trips_for_every_n_up_to_a_million() {
        for n in 1..=1_000_000u128 {
            let f = fm(n);
            assert_eq!(f.value(), &BigUint::from(n));
        }
    }

    #[test]
    fn factor_near_the_96_bit_limit() {
        let n = (1u128 << 96) - 1;
        let f = fm(n);
        assert_eq!(f.value(), &BigUint::from(n));
        assert!(f.primes().all(factor::is_prime));
    }

    #[test]
    fn crt_examples() {
        let pp = |p, a| PrimePower::new(p, a).unwrap();
        assert_eq!(crt_combine(&[(0, pp(2, 2)), (1, pp(3, 1))]).unwrap(), 4);
        assert_eq!(crt_combine(&[(1, pp(2, 2)), (1, pp(3, 1))]).unwrap(), 1);
        assert_eq!(
            crt_combine(&[(1, pp(2, 3)), (4, pp(3, 2)), (0, pp(5, 1))]).unwrap(),
            265
        );
        assert_eq!(
            crt_combine(&[(1, pp(2, 1)), (0, pp(2, 2))]),
            Err(Error::RepeatedPrime(2))
        );
        assert!(crt_combine(&[(9, pp(3, 2))]).is_err());
    }

    #[test]
    fn crt_example_by_exhaustive_scan() {
        let x = (0..360u128)
            .find(|x| x % 8 == 1 && x % 9 == 4 && x % 5 == 0)
            .unwrap();
        assert_eq!(x, 265);
        let pp = |p, a| PrimePower::new(p, a).unwrap();
        assert_eq!(crt_combine(&[(1, pp(2, 3)), (4, pp(3, 2)), (0, pp(5, 1))]).unwrap(), x);
    }

    #[test]
    fn sigma_examples() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(sigma(&fm(1)).unwrap(), r(1, 1));
        assert_eq!(sigma(&fm(30)).unwrap(), r(12, 5));
        assert_eq!(sigma(&fm(15)).unwrap(), r(8, 5));
        assert!(matches!(sigma(&fm(12)), Err(Error::NotSquarefree(_))));
    }

    #[test]
    fn big_f_examples() {
        assert_eq!(big_f(&fm(1), 1.0).unwrap(), 0.0);
        assert!((big_f(&fm(30), 1.0).unwrap() - 31.0 / 30.0).abs() < 1e-15);
        let direct = 2f64.sqrt().recip() + 3f64.sqrt().recip() + 5f64.sqrt().recip();
        assert!((big_f(&fm(30), 0.5).unwrap() - direct).abs() < 1e-15);
        assert!((big_f(&fm(30), 0.5).unwrap() - 1.7317).abs() < 1e-4);
        assert!(big_f(&fm(30), 0.0).is_err());
    }

    #[test]
    fn divisor_examples() {
        let vals = |q, f: DivisorFilter| divisor_values(&fm(q), &f).unwrap();
        assert_eq!(vals(6, DivisorFilter::none()), vec![1, 2, 3, 6]);
        assert_eq!(vals(30, DivisorFilter::none().max_value(6u32)), vec![1, 2, 3, 5, 6]);
        assert_eq!(vals(210, DivisorFilter::none().max_omega(1)), vec![1, 2, 3, 5, 7]);
        assert_eq!(vals(1, DivisorFilter::none()), vec![1]);
    }

    #[test]
    fn f_bound_for_k_at_least_three() {
        for q in [2u128, 6, 30, 105, 1155, 9_699_690, 13 * 17 * 19 * 23] {
            let q = fm(q);
            let p1 = q.primes().next().unwrap() as f64;
            for k in 3..=8 {
                let t = k as f64 / 2.0;
                assert!(big_f(&q, t).unwrap() <= 3.0 * p1.powf(1.0 - t));
            }
        }
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(fm(360).to_string(), "2^3*3^2*5");
        assert_eq!(fm(1).to_string(), "1");
        assert_eq!(fm(7).to_string(), "7");
    }
}
