//! Offset vectors and axis-aligned boxes in `R^{r-1}`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;

/// `h = (h_1, ..., h_{r-1})` with partial sums `t_0 = 0, t_i = h_1 + ... + h_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct OffsetVector {
    h: Vec<i64>,
}

impl OffsetVector {
    pub fn new(h: Vec<i64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidArgument("offset vector needs r >= 2".into()));
        }
        Ok(OffsetVector { h })
    }

    pub fn r(&self) -> usize {
        self.h.len() + 1
    }

    pub fn components(&self) -> &[i64] {
        &self.h
    }

    /// `t_0, ..., t_{r-1}` over the integers.
    pub fn partial_sums(&self) -> Vec<i128> {
        let mut t = Vec::with_capacity(self.r());
        let mut acc = 0i128;
        t.push(0);
        for &x in &self.h {
            acc += x as i128;
            t.push(acc);
        }
        t
    }

    /// Partial sums reduced into `[0, m)`.
    pub fn partial_sums_mod(&self, m: u64) -> Vec<u64> {
        partial_sums_mod(&self.h, m)
    }
}

pub(crate) fn partial_sums_mod(h: &[i64], m: u64) -> Vec<u64> {
    let mut t = Vec::with_capacity(h.len() + 1);
    let mut acc = 0u64;
    t.push(0);
    let m128 = m as u128;
    for &x in h {
        let x = (x as i128).rem_euclid(m as i128) as u128;
        acc = ((acc as u128 + x) % m128) as u64;
        t.push(acc);
    }
    t
}

/// A closed axis-aligned box `[a_1, b_1] x ... x [a_{r-1}, b_{r-1}]` with
/// rational endpoints. No wall condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cuboid {
    #[serde(serialize_with = "serialize_intervals")]
    intervals: Vec<(BigRational, BigRational)>,
}

fn serialize_intervals<S: serde::Serializer>(
    v: &[(BigRational, BigRational)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (a, b) in v {
        seq.serialize_element(&[exact::format(a), exact::format(b)])?;
    }
    seq.end()
}

impl Cuboid {
    pub fn new(intervals: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("box needs at least one interval".into()));
        }
        for (a, b) in &intervals {
            if a > b {
                return Err(Error::InvalidArgument(format!(
                    "empty interval [{}, {}]",
                    exact::format(a),
                    exact::format(b)
                )));
            }
        }
        Ok(Cuboid { intervals })
    }

    /// Convenience constructor from `(num, den)` pairs for the endpoints.
    pub fn from_ratios(pairs: &[((i64, i64), (i64, i64))]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&((an, ad), (bn, bd))| (exact::ratio(an, ad), exact::ratio(bn, bd)))
                .collect(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    /// Correlation order `r = dimension + 1`.
    pub fn r(&self) -> usize {
        self.intervals.len() + 1
    }

    pub fn intervals(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    pub fn volume(&self) -> BigRational {
        self.intervals
            .iter()
            .fold(BigRational::one(), |acc, (a, b)| acc * (b - a))
    }

    pub fn scaled(&self, s: &BigRational) -> Cuboid {
        Cuboid {
            intervals: self
                .intervals
                .iter()
                .map(|(a, b)| (a * s, b * s))
                .collect(),
        }
    }

    /// Integer ranges `[ceil(a_i), floor(b_i)]`; `None` if some range is empty.
    pub fn integer_ranges(&self) -> Result<Option<Vec<(i64, i64)>>> {
        let mut out = Vec::with_capacity(self.intervals.len());
        for (a, b) in &self.intervals {
            let lo = exact::ceil_i64(a)?;
            let hi = exact::floor_i64(b)?;
            if lo > hi {
                return Ok(None);
            }
            out.push((lo, hi));
        }
        Ok(Some(out))
    }

    /// Number of integer points, `prod (floor(b_i) - ceil(a_i) + 1)`.
    pub fn integer_point_count(&self) -> Result<u128> {
        Ok(match self.integer_ranges()? {
            None => 0,
            Some(r) => r.iter().map(|(lo, hi)| (hi - lo + 1) as u128).product(),
        })
    }

    /// First wall `sum_{j=i}^{k} h_j = 0` the box touches, as 1-based `(i, k)`.
    ///
    /// Over a box the functional ranges over `[sum a_j, sum b_j]`, which is the
    /// same as checking its sign at every vertex.
    pub fn first_wall(&self) -> Option<(usize, usize)> {
        let n = self.intervals.len();
        for i in 0..n {
            let mut lo = BigRational::zero();
            let mut hi = BigRational::zero();
            for k in i..n {
                lo += &self.intervals[k].0;
                hi += &self.intervals[k].1;
                let strictly_positive = lo.is_positive();
                let strictly_negative = hi.is_negative();
                if !(strictly_positive || strictly_negative) {
                    return Some((i + 1, k + 1));
                }
            }
        }
        None
    }
}

/// Wall-avoiding box: every partial-range sum `h_i + ... + h_k` keeps a
/// constant nonzero sign over the closed box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BoxRegion(Cuboid);

impl BoxRegion {
    pub fn new(cuboid: Cuboid) -> Result<Self> {
        match cuboid.first_wall() {
            Some((i, k)) => Err(Error::WallIntersection { i, k }),
            None => Ok(BoxRegion(cuboid)),
        }
    }

    pub fn from_ratios(pairs: &[((i64, i64), (i64, i64))]) -> Result<Self> {
        Self::new(Cuboid::from_ratios(pairs)?)
    }

    /// The unit-width box `[1/2, 3/2]^{r-1}`.
    pub fn unit_around_one(r: usize) -> Self {
        let pairs = vec![((1, 2), (3, 2)); r.saturating_sub(1).max(1)];
        Self::from_ratios(&pairs).expect("positive box")
    }

    pub fn cuboid(&self) -> &Cuboid {
        &self.0
    }
}

impl std::ops::Deref for BoxRegion {
    type Target = Cuboid;
    fn deref(&self) -> &Cuboid {
        &self.0
    }
}

/// Does the box avoid every wall?
pub fn wall_check(c: &Cuboid) -> bool {
    c.first_wall().is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_examples() {
        let c = Cuboid::from_ratios(&[((1, 2), (3, 2))]).unwrap();
        assert!(wall_check(&c));
        let c = Cuboid::from_ratios(&[((-1, 1), (1, 1))]).unwrap();
        assert!(!wall_check(&c));
        let c = Cuboid::from_ratios(&[((1, 2), (3, 2)), ((1, 2), (3, 2))]).unwrap();
        assert!(wall_check(&c));
    }

    #[test]
    fn mixed_signs_hit_the_sum_wall() {
        // h1 > 0, h2 < 0, but h1 + h2 changes sign
        let c = Cuboid::from_ratios(&[((1, 1), (2, 1)), ((-3, 1), (-1, 2))]).unwrap();
        assert_eq!(c.first_wall(), Some((1, 2)));
        // shifting h2 far enough negative clears it
        let c = Cuboid::from_ratios(&[((1, 1), (2, 1)), ((-5, 1), (-3, 1))]).unwrap();
        assert_eq!(c.first_wall(), None);
        assert!(matches!(
            BoxRegion::from_ratios(&[((0, 1), (1, 1))]),
            Err(Error::WallIntersection { i: 1, k: 1 })
        ));
    }

    #[test]
    fn partial_sums() {
        let h = OffsetVector::new(vec![2, 3]).unwrap();
        assert_eq!(h.partial_sums(), vec![0, 2, 5]);
        assert_eq!(h.partial_sums_mod(5), vec![0, 2, 0]);
        let h = OffsetVector::new(vec![-1, -1]).unwrap();
        assert_eq!(h.partial_sums_mod(7), vec![0, 6, 5]);
    }

    #[test]
    fn integer_points() {
        let c = Cuboid::from_ratios(&[((1, 2), (3, 2))]).unwrap();
        let sc = c.scaled(&exact::ratio(7, 4));
        assert_eq!(sc.integer_ranges().unwrap(), Some(vec![(1, 2)]));
        assert_eq!(sc.volume(), exact::ratio(7, 4));
    }
}
