//! Normalized consecutive spacings of `X_Q`, their distance to the
//! exponential law, and the prime-modulus gap distribution.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::modulus::factor::is_prime;
use crate::modulus::FactoredModulus;
use crate::residues::{self, ResidueSet};

pub const DEFAULT_BINS: usize = 40;
pub const DEFAULT_MAX_Y: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingMode {
    /// Wraps around: `N_Q` gaps summing to `Q`, normalized by `Q / N_Q`.
    Circular,
    /// `N_Q - 1` gaps normalized by `(x_N - x_1) / N_Q`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub max_y: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Values above `max_y`.
    pub overflow: u64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, max_y: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        if !(max_y > 0.0) {
            return Err(Error::range("histogram upper edge", max_y, "must be positive"));
        }
        let bin_width = max_y / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut overflow = 0;
        for &y in values {
            if y > max_y {
                overflow += 1;
            } else {
                // bins are [lo, hi) except the last, which is closed
                let i = ((y / bin_width) as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        Ok(Histogram {
            max_y,
            bin_width,
            counts,
            overflow,
        })
    }

    /// `(bin_lo, bin_hi, count, density)` rows, density normalized by the
    /// total number of samples including overflow.
    pub fn rows(&self) -> Vec<(f64, f64, u64, f64)> {
        let total: u64 = self.counts.iter().sum::<u64>() + self.overflow;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let lo = i as f64 * self.bin_width;
                let density = if total == 0 {
                    0.0
                } else {
                    c as f64 / (total as f64 * self.bin_width)
                };
                (lo, lo + self.bin_width, c, density)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpacingSummary {
    pub mode: SpacingMode,
    /// Normalizing spacing: `Q / N_Q` (circular) or `(x_N - x_1) / N_Q` (linear).
    #[serde(serialize_with = "exact::serialize")]
    pub scale: BigRational,
    pub gaps: Vec<u64>,
    pub normalized: Vec<f64>,
    pub histogram: Histogram,
    pub ks_distance: f64,
}

impl SpacingSummary {
    pub fn mean_normalized(&self) -> f64 {
        self.normalized.iter().sum::<f64>() / self.normalized.len() as f64
    }
}

pub fn consecutive_gaps(x: &ResidueSet, mode: SpacingMode) -> Vec<u64> {
    let e = x.elements();
    let mut gaps: Vec<u64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    if mode == SpacingMode::Circular {
        if let (Some(&first), Some(&last)) = (e.first(), e.last()) {
            gaps.push(first + x.q() - last);
        }
    }
    gaps
}

pub fn spacing_summary(
    x: &ResidueSet,
    mode: SpacingMode,
    bins: usize,
    max_y: f64,
) -> Result<SpacingSummary> {
    let n = x.len();
    if n < 2 {
        return Err(Error::range("residue count", n, "need at least two residues for spacings"));
    }
    let gaps = consecutive_gaps(x, mode);
    let scale = match mode {
        SpacingMode::Circular => BigRational::new(x.q().into(), (n as u64).into()),
        SpacingMode::Linear => {
            let e = x.elements();
            BigRational::new((e[n - 1] - e[0]).into(), (n as u64).into())
        }
    };
    // y = gap * N / span, one division per gap
    let (num, den) = match mode {
        SpacingMode::Circular => (n as f64, x.q() as f64),
        SpacingMode::Linear => (n as f64, (x.elements()[n - 1] - x.elements()[0]) as f64),
    };
    let normalized: Vec<f64> = gaps.iter().map(|&g| g as f64 * num / den).collect();
    let histogram = Histogram::new(&normalized, bins, max_y)?;
    let ks_distance = ks_exponential(&normalized)?;
    Ok(SpacingSummary {
        mode,
        scale,
        gaps,
        normalized,
        histogram,
        ks_distance,
    })
}

/// Convenience wrapper: enumerate `X_Q` and summarize with the defaults.
pub fn spacing_summary_for(q: &FactoredModulus, mode: SpacingMode) -> Result<SpacingSummary> {
    let x = residues::enumerate_squares(q)?;
    spacing_summary(&x, mode, DEFAULT_BINS, DEFAULT_MAX_Y)
}

/// Kolmogorov-Smirnov distance `sup |F_n(x) - (1 - e^{-x})|`, checked at both
/// one-sided limits of the empirical CDF at every sample point.
pub fn ks_exponential(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("KS distance of an empty sample".into()));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("sample contains NaN".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = if x <= 0.0 { 0.0 } else { -(-x).exp_m1() };
        let below = i as f64 / n;
        let at = (i + 1) as f64 / n;
        d = d.max(at - cdf).max(cdf - below);
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapFrequency {
    pub gap: u64,
    pub count: u64,
    pub frequency: f64,
    /// `2^{-gap}`
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DavenportTable {
    pub p: u64,
    pub total_gaps: u64,
    pub rows: Vec<GapFrequency>,
    /// Gaps longer than `max_gap`.
    pub beyond: u64,
}

/// Frequencies of the circular gaps between consecutive squares mod `p`.
pub fn davenport_distribution(p: u64, max_gap: u64) -> Result<DavenportTable> {
    if p < 5 || !is_prime(p as u128) {
        return Err(Error::range("prime", p, "must be a prime at least 5"));
    }
    if max_gap == 0 {
        return Err(Error::InvalidArgument("max gap must be positive".into()));
    }
    let q = FactoredModulus::from_primes(&[p as u128])?;
    let x = residues::enumerate_squares(&q)?;
    let gaps = consecutive_gaps(&x, SpacingMode::Circular);
    let total = gaps.len() as u64;
    let mut counts = vec![0u64; max_gap as usize + 1];
    let mut beyond = 0;
    for g in gaps {
        if g <= max_gap {
            counts[g as usize] += 1;
        } else {
            beyond += 1;
        }
    }
    let rows = (1..=max_gap)
        .map(|g| GapFrequency {
            gap: g,
            count: counts[g as usize],
            frequency: counts[g as usize] as f64 / total as f64,
            expected: 0.5f64.powi(g as i32),
        })
        .collect();
    Ok(DavenportTable {
        p,
        total_gaps: total,
        rows,
        beyond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::factor;

    fn set(q: u128) -> ResidueSet {
        residues::enumerate_squares(&factor(q).unwrap()).unwrap()
    }

    #[test]
    fn twelve_circular() {
        let s = spacing_summary(&set(12), SpacingMode::Circular, 40, 8.0).unwrap();
        assert_eq!(s.gaps, vec![1, 3, 5, 3]);
        assert_eq!(s.scale, exact::ratio(3, 1));
        let expect = [1.0 / 3.0, 1.0, 5.0 / 3.0, 1.0];
        for (a, b) in s.normalized.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn four_circular_has_mean_one() {
        let s = spacing_summary(&set(4), SpacingMode::Circular, 40, 8.0).unwrap();
        assert_eq!(s.gaps, vec![1, 3]);
        assert_eq!(s.normalized, vec![0.5, 1.5]);
        assert_eq!(s.mean_normalized(), 1.0);
    }

    #[test]
    fn linear_mode_spans_first_to_last() {
        let s = spacing_summary(&set(12), SpacingMode::Linear, 40, 8.0).unwrap();
        assert_eq!(s.gaps, vec![1, 3, 5]);
        assert_eq!(s.gaps.iter().sum::<u64>(), 9);
        assert_eq!(s.scale, exact::ratio(9, 4));
    }

    #[test]
    fn too_few_residues() {
        assert!(spacing_summary(&set(1), SpacingMode::Circular, 40, 8.0).is_err());
    }

    #[test]
    fn histogram_accounts_for_overflow() {
        let h = Histogram::new(&[0.0, 0.5, 7.99, 8.0, 8.5, 100.0], 4, 8.0).unwrap();
        assert_eq!(h.counts, vec![2, 0, 0, 2]);
        assert_eq!(h.overflow, 2);
        let total: f64 = h.rows().iter().map(|r| r.3 * h.bin_width).sum();
        assert!((total - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ks_on_exact_quantiles() {
        let n = 1000;
        let sample: Vec<f64> = (1..=n)
            .map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln())
            .collect();
        let d = ks_exponential(&sample).unwrap();
        assert!(d <= 1.0 / (2.0 * n as f64) + 1e-12, "{d}");
    }

    #[test]
    fn ks_degenerate() {
        assert_eq!(ks_exponential(&[0.0]).unwrap(), 1.0);
        assert!(ks_exponential(&[]).is_err());
    }

    #[test]
    fn davenport_small_primes() {
        let t = davenport_distribution(7, 4).unwrap();
        let f: Vec<f64> = t.rows.iter().map(|r| r.frequency).collect();
        assert_eq!(f, vec![0.5, 0.25, 0.25, 0.0]);
        let t = davenport_distribution(11, 4).unwrap();
        assert_eq!(t.rows[0].frequency, 0.5);
        assert_eq!(t.rows[1].count, 2);
        assert_eq!(t.rows[3].count, 1);
        assert!(davenport_distribution(3, 4).is_err());
        assert!(davenport_distribution(15, 4).is_err());
    }

    #[test]
    fn davenport_large_prime() {
        let t = davenport_distribution(10007, 6).unwrap();
        for r in &t.rows {
            assert!((r.frequency - r.expected).abs() <= 0.01, "{r:?}");
        }
    }
}
