//! Word-sized modular arithmetic used by primality testing, factoring and CRT.

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `a * b mod m` without overflow for any `m < 2^128`.
pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    let (a, b) = (a % m, b % m);
    if let Some(p) = a.checked_mul(b) {
        return p % m;
    }
    // shift-and-add; only reached for moduli above 2^64
    let mut result = 0u128;
    let mut a = a;
    let mut b = b;
    while b > 0 {
        if b & 1 == 1 {
            result = add_mod(result, a, m);
        }
        a = add_mod(a, a, m);
        b >>= 1;
    }
    result
}

fn add_mod(a: u128, b: u128, m: u128) -> u128 {
    // a, b < m
    if a >= m - b {
        a - (m - b)
    } else {
        a + b
    }
}

pub fn pow_mod(base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u128;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

pub fn pow_mod_u64(base: u64, exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut result = 1u128;
    let mut b = (base % m) as u128;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m128;
        }
        b = b * b % m128;
        e >>= 1;
    }
    result as u64
}

/// Inverse of `a` modulo `m` for coprime `a`, `m`.
pub fn inverse_mod(a: u128, m: u128) -> Option<u128> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    if old_r < 0 {
        old_r += m as i128;
    }
    // extended Euclid on signed values; moduli here stay below 2^126
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u128)
}

/// Reduce a signed value into `[0, m)`.
#[inline]
pub fn residue(v: i64, m: u64) -> u64 {
    (v as i128).rem_euclid(m as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_mod_matches_wide_product() {
        let m = (1u128 << 100) + 277;
        let a = (1u128 << 99) + 12345;
        let b = (1u128 << 98) + 999;
        // (a*b) mod m by splitting b into bits independently
        let mut expected = 0u128;
        for bit in (0..128).rev() {
            expected = (expected * 2) % m;
            if (b >> bit) & 1 == 1 {
                expected = (expected + a % m) % m;
            }
        }
        assert_eq!(mul_mod(a, b, m), expected);
    }

    #[test]
    fn inverse_roundtrip() {
        for m in 2u128..60 {
            for a in 1..m {
                match inverse_mod(a, m) {
                    Some(inv) => assert_eq!(a * inv % m, 1),
                    None => assert_ne!(gcd_u128(a, m), 1),
                }
            }
        }
    }

    #[test]
    fn residue_is_euclidean() {
        assert_eq!(residue(-1, 7), 6);
        assert_eq!(residue(-14, 7), 0);
        assert_eq!(residue(15, 7), 1);
    }
}
