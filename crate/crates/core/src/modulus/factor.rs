//! Deterministic factorization: trial division up to 10^6, then Miller-Rabin
//! and Brent's variant of Pollard rho with a fixed increment schedule.

use super::arith::{gcd_u128, mul_mod, pow_mod};

pub const TRIAL_LIMIT: u64 = 1_000_000;

const MR_BASES: [u128; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Miller-Rabin with the first 12 prime bases (a proof below 3.3e24) and
/// eight more bases above that. Deterministic in every case.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in MR_BASES.iter() {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let bases: &[u128] = if n < 3_317_044_064_679_887_385_961_981 {
        &MR_BASES[..13]
    } else {
        &MR_BASES
    };
    'outer: for &a in bases {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Brent's cycle-finding rho. Tries `c = 1, 2, 3, ...` until a proper factor
/// falls out, so the result depends only on `n`.
fn pollard_brent(n: u128) -> u128 {
    if n % 2 == 0 {
        return 2;
    }
    for c in 1u128.. {
        let f = |x: u128| (mul_mod(x, x, n) + c) % n;
        let mut y = 2u128;
        let mut r = 1u64;
        let mut q = 1u128;
        let m = 128u64;
        let mut g = 1u128;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u128(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            // backtrack one step at a time
            loop {
                ys = f(ys);
                g = gcd_u128(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

/// Prime factors of `n` with multiplicity, in increasing order.
pub fn prime_factors(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    while n % 2 == 0 {
        out.push(2);
        n /= 2;
    }
    let mut p = 3u128;
    while p <= TRIAL_LIMIT as u128 && p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += 2;
    }
    if n > 1 {
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime(m) {
                out.push(m);
                continue;
            }
            let d = pollard_brent(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n as u128), trial_is_prime(n), "n = {n}");
        }
    }

    #[test]
    fn strong_pseudoprimes_rejected() {
        // strong pseudoprimes to several small bases
        for n in [3_215_031_751u128, 2_152_302_898_747, 3_474_749_660_383, 341_550_071_728_321] {
            assert!(!is_prime(n), "{n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557)); // largest 64-bit prime
        assert!(is_prime((1u128 << 89) - 1)); // Mersenne prime
    }

    #[test]
    fn rho_splits_semiprimes_past_trial_limit() {
        let p = 1_000_003u128;
        let q = 998_244_353u128;
        assert_eq!(prime_factors(p * q), vec![p, q]);
        let big = 4_294_967_311u128 * 4_294_967_357u128 * 1_000_033u128;
        assert_eq!(prime_factors(big), vec![1_000_033, 4_294_967_311, 4_294_967_357]);
    }
}
