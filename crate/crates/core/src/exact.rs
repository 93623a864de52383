//! Small helpers around `BigRational`: construction, rounding to machine
//! integers, and the `"num/den"` text form used in every serialized report.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serializer;

use crate::error::{Error, Result};

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn from_int(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

pub fn from_uint(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

/// Always `num/den`, even for integers.
pub fn format(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `a`, `a/b` or a finite decimal such as `-0.125` exactly.
pub fn parse(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let v = BigRational::new(num, den);
    Ok(if neg { -v } else { v })
}

pub fn to_f64(x: &BigRational) -> f64 {
    // numerator and denominator may both overflow f64; scale by bit length
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = x.numer().bits().max(x.denom().bits()) as i64 - 900;
            let n = (x.numer() >> shift.max(0) as usize).to_f64().unwrap_or(f64::NAN);
            let d = (x.denom() >> shift.max(0) as usize).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

pub fn ceil_i64(x: &BigRational) -> Result<i64> {
    x.ceil()
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::range("integer bound", format(x), "does not fit in 64 bits"))
}

pub fn floor_i64(x: &BigRational) -> Result<i64> {
    x.floor()
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::range("integer bound", format(x), "does not fit in 64 bits"))
}

pub fn abs(x: &BigRational) -> BigRational {
    x.abs()
}

pub fn pow(x: &BigRational, e: u32) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format(x))
}

pub fn serialize_opt<S: Serializer>(
    x: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&format(v)),
        None => s.serialize_none(),
    }
}

/// Big integers as decimal strings.
pub fn serialize_uint<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("0.5").unwrap(), ratio(1, 2));
        assert_eq!(parse("-1").unwrap(), ratio(-1, 1));
        assert_eq!(parse("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse("-.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse("1.").unwrap(), ratio(1, 1));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse(".").is_err());
        assert!(parse("1e3").is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(ceil_i64(&ratio(7, 8)).unwrap(), 1);
        assert_eq!(floor_i64(&ratio(21, 8)).unwrap(), 2);
        assert_eq!(ceil_i64(&ratio(-7, 8)).unwrap(), 0);
        assert_eq!(floor_i64(&ratio(-7, 8)).unwrap(), -1);
    }

    #[test]
    fn text_form() {
        assert_eq!(format(&ratio(4, 1)), "4/1");
        assert_eq!(format(&ratio(-6, 4)), "-3/2");
    }

    #[test]
    fn huge_ratio_to_f64() {
        let big = from_int(num_traits::pow(BigInt::from(10), 400));
        let x = (&big * BigInt::from(3)) / (&big * BigInt::from(4));
        assert_eq!(to_f64(&x), 0.75);
    }
}
