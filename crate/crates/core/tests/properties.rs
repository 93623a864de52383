use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use qrspace::correlations::{self, OffsetVector};
use qrspace::delta;
use qrspace::modulus::{crt_combine, divisor_values, factor, sigma, DivisorFilter, FactoredModulus};
use qrspace::parse::parse_modulus;
use qrspace::residues;
use qrspace::spacings::ks_exponential;

const SMALL_PRIMES: [u128; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn squarefree() -> impl Strategy<Value = FactoredModulus> {
    proptest::sample::subsequence(SMALL_PRIMES.to_vec(), 1..=5)
        .prop_map(|ps| FactoredModulus::from_primes(&ps).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn crt_round_trip(x in 0u128..1_000_000_000, q in 2u128..1_000_000_000) {
        let m = factor(q).unwrap();
        let x = x % q;
        let parts: Vec<_> = m
            .factors()
            .iter()
            .map(|pk| (x % pk.value().to_u128().unwrap(), *pk))
            .collect();
        prop_assert_eq!(crt_combine(&parts).unwrap(), x);
    }

    #[test]
    fn factor_display_round_trip(q in 1u128..u64::MAX as u128) {
        let m = factor(q).unwrap();
        prop_assert_eq!(m.value().to_u128().unwrap(), q);
        prop_assert_eq!(parse_modulus(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn sigma_is_a_divisor_sum(q in squarefree()) {
        let direct = divisor_values(&q, &DivisorFilter::none())
            .unwrap()
            .into_iter()
            .map(|d| BigRational::new(BigInt::from(1), BigInt::from(d)))
            .fold(BigRational::zero(), |a, b| a + b);
        prop_assert_eq!(sigma(&q).unwrap(), direct);
    }

    #[test]
    fn crt_enumeration_matches_sieve(q in 1u128..50_000) {
        let m = factor(q).unwrap();
        let crt = residues::enumerate_squares(&m).unwrap();
        let mut naive: Vec<u64> = (0..q as u64).map(|x| x * x % q as u64).collect();
        naive.sort_unstable();
        naive.dedup();
        prop_assert_eq!(crt.elements(), naive.as_slice());
        prop_assert_eq!(residues::count_squares(&m), naive.len().into());
    }

    #[test]
    fn ks_ignores_order(mut v in proptest::collection::vec(0.0f64..10.0, 2..200), seed in any::<u64>()) {
        let before = ks_exponential(&v).unwrap();
        // deterministic shuffle by sort key
        v.sort_by_key(|x| (x.to_bits() ^ seed).rotate_left(17));
        prop_assert_eq!(before, ks_exponential(&v).unwrap());
    }

    #[test]
    fn delta_is_capped(q in squarefree(), h in proptest::collection::vec(-60i64..60, 1..4)) {
        let r = h.len() + 1;
        let hv = OffsetVector::new(h).unwrap();
        let d = delta::delta_composite(&hv, &q).unwrap();
        prop_assert!(d >= 1);
        prop_assert!(d <= 1u128 << ((r - 1) * q.omega()));
    }

    #[test]
    fn n_is_multiplicative(h in -200i64..200, a in 1u128..120, b in 1u128..120) {
        prop_assume!(gcd(a, b) == 1);
        let hv = OffsetVector::new(vec![h]).unwrap();
        let n = |q: u128| correlations::big_n(&hv, &factor(q).unwrap()).unwrap();
        prop_assert_eq!(n(a * b), n(a) * n(b));
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
