//! Squares modulo prime powers and modulo `Q`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::arith::{inverse_mod, pow_mod_u64};
use crate::modulus::{FactoredModulus, PrimePower};

/// Largest residue set `enumerate_squares` builds by default (2^26 elements).
pub const DEFAULT_RESIDUE_CAP: u64 = 1 << 26;

/// Largest modulus accepted by the direct-sieve oracle.
pub const SIEVE_ORACLE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueSet {
    modulus: FactoredModulus,
    q: u64,
    elements: Vec<u64>,
}

impl ResidueSet {
    pub fn modulus(&self) -> &FactoredModulus {
        &self.modulus
    }

    /// `Q` as a machine word.
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }
}

/// Is `x` a square modulo `p^alpha`?
///
/// Writes `x = u p^v` with `u` a unit. A nonzero `x` is a square iff `v` is
/// even and `u` is a square unit modulo `p^(alpha - v)`: Euler's criterion
/// for odd `p`, and `u = 1 mod gcd(8, 2^(alpha - v))` for `p = 2`.
pub fn is_square_mod_pk(x: u64, pk: PrimePower) -> Result<bool> {
    let m = pk.modulus_u64()?;
    let p = pk.prime_u64()?;
    if x >= m {
        return Err(Error::range("residue", x, format!("must be below {m}")));
    }
    if x == 0 {
        return Ok(true);
    }
    let mut u = x;
    let mut v = 0u32;
    while u % p == 0 {
        u /= p;
        v += 1;
    }
    if v % 2 == 1 {
        return Ok(false);
    }
    let rest = pk.alpha - v;
    Ok(unit_is_square(u, p, rest))
}

fn unit_is_square(u: u64, p: u64, exponent: u32) -> bool {
    if p == 2 {
        let m = match exponent {
            0 => 1,
            1 => 2,
            2 => 4,
            _ => 8,
        };
        u % m == 1 % m
    } else {
        // a unit is a square mod p^k iff it is one mod p (Hensel)
        pow_mod_u64(u % p, (p - 1) / 2, p) == 1
    }
}

/// Number of unit squares modulo `p^k`.
fn unit_square_count(p: &BigUint, k: u32) -> BigUint {
    if k == 0 {
        return BigUint::one();
    }
    if *p == BigUint::from(2u32) {
        return match k {
            1 | 2 => BigUint::one(),
            _ => BigUint::one() << (k - 3),
        };
    }
    // phi(p^k) / 2
    (p - 1u32) * p.pow(k - 1) / 2u32
}

/// `N_{p^k}` by the even-valuation recursion `N_k = U(p, k) + N_{k-2}`.
pub fn count_squares_pk(pk: PrimePower) -> BigUint {
    let p = BigUint::from(pk.p);
    let k = pk.alpha;
    // the zero residue stands in for N_{p^0} = 1 at the bottom of the recursion
    let mut total = BigUint::one();
    let mut j = k;
    loop {
        total += unit_square_count(&p, j);
        if j <= 2 {
            break;
        }
        j -= 2;
    }
    total
}

/// `N_Q = prod N_{p^alpha}`.
pub fn count_squares(q: &FactoredModulus) -> BigUint {
    q.factors().iter().map(|&pk| count_squares_pk(pk)).product()
}

/// The sorted squares modulo a single prime power, by direct squaring.
pub fn squares_mod_pk(pk: PrimePower) -> Result<Vec<u64>> {
    let m = pk.modulus_u64()?;
    if m > SIEVE_ORACLE_LIMIT {
        return Err(Error::cap("prime power for square table", m, SIEVE_ORACLE_LIMIT));
    }
    Ok(squares_mod(m))
}

/// `{x^2 mod m}` by squaring every residue. The oracle for the CRT path.
pub fn squares_mod(m: u64) -> Vec<u64> {
    let mut hit = vec![false; m as usize];
    let mm = m as u128;
    for x in 0..m.div_ceil(2) + 1 {
        if x < m {
            hit[((x as u128 * x as u128) % mm) as usize] = true;
        }
    }
    hit.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u64))
        .collect()
}

/// Squares modulo `Q` by the direct sieve, for `Q <= 10^7`.
pub fn enumerate_squares_sieve(q: &FactoredModulus) -> Result<Vec<u64>> {
    let m = q.to_u64()?;
    if m > SIEVE_ORACLE_LIMIT {
        return Err(Error::cap("modulus for direct sieve", m, SIEVE_ORACLE_LIMIT));
    }
    Ok(squares_mod(m))
}

pub fn enumerate_squares(q: &FactoredModulus) -> Result<ResidueSet> {
    enumerate_squares_capped(q, DEFAULT_RESIDUE_CAP)
}

/// `X_Q` as the CRT product of the per-prime-power square sets.
pub fn enumerate_squares_capped(q: &FactoredModulus, cap: u64) -> Result<ResidueSet> {
    let qv = q.to_u64()?;
    let n = count_squares(q);
    if n > BigUint::from(cap) {
        return Err(Error::cap("residue set", n, cap));
    }
    let mut acc: Vec<u64> = vec![0];
    let mut m_acc: u64 = 1;
    for &pk in q.factors() {
        let mk = pk.modulus_u64()?;
        let local: Vec<u64> = if mk <= SIEVE_ORACLE_LIMIT {
            squares_mod(mk)
        } else {
            return Err(Error::cap("prime power for square table", mk, SIEVE_ORACLE_LIMIT));
        };
        // x = a + m_acc * ((b - a) * m_acc^{-1} mod mk)
        let inv = inverse_mod((m_acc % mk) as u128, mk as u128).expect("coprime") as u64;
        let new_m = m_acc * mk;
        acc = acc
            .par_iter()
            .flat_map_iter(|&a| {
                let a_mod = a % mk;
                local.iter().map(move |&b| {
                    let diff = (b + mk - a_mod) % mk;
                    let k = (diff as u128 * inv as u128 % mk as u128) as u64;
                    a + m_acc * k
                })
            })
            .collect();
        m_acc = new_m;
    }
    debug_assert_eq!(m_acc, qv);
    acc.par_sort_unstable();
    Ok(ResidueSet {
        modulus: q.clone(),
        q: qv,
        elements: acc,
    })
}

/// `s = Q / N_Q`.
pub fn mean_spacing(q: &FactoredModulus) -> BigRational {
    BigRational::new(q.value().clone().into(), count_squares(q).into())
}

/// `N_{p^k} * 2 / (p^k sigma(p))`, the ratio the leading-order estimate
/// predicts to be `1 + O(p^-2)`.
pub fn leading_order_ratio(pk: PrimePower) -> BigRational {
    let n = exact::from_uint(&count_squares_pk(pk));
    let pkv = exact::from_uint(&pk.value());
    let sigma_p = BigRational::new((pk.p + 1).into(), pk.p.into());
    n * exact::from_int(2) / (pkv * sigma_p)
}
