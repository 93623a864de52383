//! Text forms for moduli (`"2^3*3*5^2"` or `"360"`) and boxes
//! (`"0.5:1.5,1/2:3/2"`).

use crate::correlations::{BoxRegion, Cuboid};
use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::{factor, FactoredModulus, PrimePower};

pub fn parse_modulus(spec: &str) -> Result<FactoredModulus> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(Error::Parse("empty modulus".into()));
    }
    let int = |s: &str| -> Result<u128> {
        let s = s.trim();
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("expected an integer, got {s:?}")));
        }
        s.parse()
            .map_err(|_| Error::Parse(format!("{s} does not fit in 128 bits")))
    };
    if !spec.contains(['*', '^']) {
        return factor(int(spec)?);
    }
    let mut factors = Vec::new();
    for term in spec.split('*') {
        let (base, exp) = match term.split_once('^') {
            Some((b, e)) => (int(b)?, int(e)?),
            None => (int(term)?, 1),
        };
        let exp = u32::try_from(exp).map_err(|_| Error::Parse(format!("exponent {exp} too large")))?;
        factors.push(PrimePower::new(base, exp)?);
    }
    FactoredModulus::from_prime_powers(factors)
}

/// Parses a box without the wall check.
pub fn parse_cuboid(spec: &str) -> Result<Cuboid> {
    let intervals = spec
        .split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected a:b, got {pair:?}")))?;
            Ok((exact::parse(a)?, exact::parse(b)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Cuboid::new(intervals)
}

/// Parses `r - 1` intervals and applies the wall check.
pub fn parse_box(spec: &str, r: usize) -> Result<BoxRegion> {
    let c = parse_cuboid(spec)?;
    if c.r() != r {
        return Err(Error::Dimension {
            expected: r.saturating_sub(1),
            got: c.dimension(),
        });
    }
    BoxRegion::new(c)
}

/// Parses `"h1,h2,..."`.
pub fn parse_offsets(spec: &str) -> Result<Vec<i64>> {
    spec.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("not an integer offset: {x:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_forms() {
        let m = parse_modulus("2^2*3*5").unwrap();
        assert_eq!(m, parse_modulus("60").unwrap());
        assert_eq!(m.to_string(), "2^2*3*5");
        assert_eq!(parse_modulus(&m.to_string()).unwrap(), m);
        assert_eq!(parse_modulus("5*2^2*3").unwrap(), m);
        assert_eq!(parse_modulus("1").unwrap(), FactoredModulus::one());
        assert!(matches!(parse_modulus("4^2"), Err(Error::CompositeBase(4))));
        assert!(matches!(parse_modulus("2*3*2"), Err(Error::RepeatedPrime(2))));
        assert!(matches!(parse_modulus("0"), Err(Error::ZeroModulus)));
        for bad in ["", "2^", "x", "2**3", "-6", "2^0"] {
            assert!(parse_modulus(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn box_forms() {
        assert!(parse_box("0.5:1.5", 2).is_ok());
        assert!(parse_box("0.5:1.5,0.5:1.5", 3).is_ok());
        assert_eq!(parse_box("1/2:3/2", 2).unwrap(), parse_box("0.5:1.5", 2).unwrap());
        assert!(matches!(
            parse_box("-1:1", 2),
            Err(Error::WallIntersection { i: 1, k: 1 })
        ));
        assert!(matches!(parse_box("0.5:1.5", 3), Err(Error::Dimension { .. })));
        assert!(parse_box("2:1", 2).is_err());
        assert!(parse_box("1", 2).is_err());
    }

    #[test]
    fn offsets() {
        assert_eq!(parse_offsets("2, -3").unwrap(), vec![2, -3]);
        assert!(parse_offsets("2,x").is_err());
    }
}
