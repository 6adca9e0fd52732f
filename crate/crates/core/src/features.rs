//! Delta / delta-delta regression features and per-signature z-score
//! normalization.

use crate::error::{Error, Result};
use crate::signal::{BaseFeature, Channel, FeatureMatrix, RawSignature};

/// Population standard deviations below this are treated as a constant column.
pub const CONSTANT_STD: f64 = 1e-12;

/// Half-window of the delta regression; the window spans `2M+1` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaConfig {
    half_window: usize,
}

impl DeltaConfig {
    pub fn new(half_window: usize) -> Result<Self> {
        if half_window == 0 {
            return Err(Error::InvalidConfig(
                "delta window must be an odd length of at least 3 (M >= 1)".into(),
            ));
        }
        Ok(DeltaConfig { half_window })
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    /// Shortest series the delta accepts: 2M+1.
    pub fn min_len(&self) -> usize {
        2 * self.half_window + 1
    }
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig { half_window: 2 }
    }
}

/// Least-squares local slope over `[n-M, n+M]`, with out-of-range samples
/// replaced by the nearest endpoint. Output length equals input length.
pub fn delta(series: &[f64], cfg: DeltaConfig) -> Result<Vec<f64>> {
    let m = cfg.half_window as isize;
    let len = series.len();
    if len < cfg.min_len() {
        return Err(Error::SignalTooShort {
            len,
            min: cfg.min_len(),
        });
    }
    // sum_{k=-M..M} k^2 = M(M+1)(2M+1)/3
    let denom = (m * (m + 1) * (2 * m + 1)) as f64 / 3.0;
    let last = len as isize - 1;
    let at = |i: isize| series[i.clamp(0, last) as usize];
    let out = (0..len as isize)
        .map(|n| {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += k as f64 * (at(n + k) - at(n - k));
            }
            acc / denom
        })
        .collect();
    Ok(out)
}

pub fn delta_delta(series: &[f64], cfg: DeltaConfig) -> Result<Vec<f64>> {
    delta(&delta(series, cfg)?, cfg)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with divisor L.
pub fn population_std(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    (xs.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// `(c - mean) / std`; a constant column maps to all zeros.
pub fn zscore(column: &[f64]) -> Vec<f64> {
    if column.is_empty() {
        return Vec::new();
    }
    let mu = mean(column);
    let sd = population_std(column);
    if sd < CONSTANT_STD {
        return vec![0.0; column.len()];
    }
    column.iter().map(|v| (v - mu) / sd).collect()
}

/// Builds the 15-channel normalized feature matrix of one signature. Deltas
/// are taken on the raw channels; every column is then z-scored against the
/// signature's own statistics.
pub fn extract(sig: &RawSignature, cfg: DeltaConfig) -> Result<FeatureMatrix> {
    sig.check_min_len(cfg.min_len())?;
    let base: Vec<Vec<f64>> = BaseFeature::ALL.iter().map(|&f| sig.channel(f)).collect();
    let deltas = base
        .iter()
        .map(|c| delta(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    let delta2 = deltas
        .iter()
        .map(|c| delta(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<Vec<f64>> = base
        .iter()
        .chain(&deltas)
        .chain(&delta2)
        .map(|c| zscore(c))
        .collect();
    FeatureMatrix::from_columns(&Channel::all(), &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Sample, SignatureKind};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Direct evaluation of the regression formula, index by index.
    pub(crate) fn delta_oracle(s: &[f64], m: usize) -> Vec<f64> {
        let m = m as i64;
        let n = s.len() as i64;
        let get = |i: i64| -> f64 {
            if i < 0 {
                s[0]
            } else if i >= n {
                s[(n - 1) as usize]
            } else {
                s[i as usize]
            }
        };
        (0..n)
            .map(|t| {
                let num: f64 = (-m..=m).map(|k| k as f64 * get(t + k)).sum();
                let den: f64 = (-m..=m).map(|k| (k * k) as f64).sum();
                num / den
            })
            .collect()
    }

    fn cfg(m: usize) -> DeltaConfig {
        DeltaConfig::new(m).unwrap()
    }

    #[test]
    fn window_must_be_at_least_three() {
        assert!(DeltaConfig::new(0).is_err());
        assert_eq!(cfg(1).min_len(), 3);
        assert_eq!(DeltaConfig::default().half_window(), 2);
    }

    #[test]
    fn delta_of_constant_is_zero() {
        assert_eq!(delta(&[5.0; 5], cfg(1)).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn delta_of_unit_ramp() {
        let ramp: Vec<f64> = (0..7).map(f64::from).collect();
        let d = delta(&ramp, cfg(2)).unwrap();
        assert_eq!(d[3], 1.0);
        assert_eq!(d.len(), 7);
    }

    #[test]
    fn delta_matches_direct_formula() {
        let s = [1.0, 3.0, 2.0, 5.0, 4.0];
        // frozen from the oracle: [0.5*(3-1), 0.5*(2-1), 0.5*(5-3), 0.5*(4-2), 0.5*(4-5)]
        let expected = [1.0, 0.5, 1.0, 1.0, -0.5];
        assert_eq!(delta_oracle(&s, 1), expected);
        let d = delta(&s, cfg(1)).unwrap();
        for (a, b) in d.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn delta_rejects_short_series() {
        assert!(matches!(
            delta(&[1.0, 2.0, 3.0, 4.0], cfg(2)),
            Err(Error::SignalTooShort { len: 4, min: 5 })
        ));
    }

    #[test]
    fn delta_delta_cases() {
        assert_eq!(delta_delta(&[2.0; 6], cfg(1)).unwrap(), vec![0.0; 6]);
        let ramp: Vec<f64> = (0..12).map(f64::from).collect();
        let dd = delta_delta(&ramp, cfg(2)).unwrap();
        for v in &dd[4..8] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
        let quad: Vec<f64> = (0..10).map(|n| (n * n) as f64).collect();
        let oracle = delta_oracle(&delta_oracle(&quad, 1), 1);
        let dd = delta_delta(&quad, cfg(1)).unwrap();
        // interior second difference of n^2 through two M=1 slopes
        for v in &oracle[2..8] {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-12);
        }
        for (a, b) in dd.iter().zip(&oracle) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn zscore_cases() {
        assert_eq!(zscore(&[4.0, 4.0, 4.0]), vec![0.0; 3]);
        let z = zscore(&[1.0, 2.0, 3.0]);
        let s = (2.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(z[0], -1.0 / s, epsilon = 1e-12);
        assert_abs_diff_eq!(z[0], -1.2247, epsilon = 1e-4);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[2], 1.2247, epsilon = 1e-4);
    }

    fn sinusoid_signature(len: usize) -> RawSignature {
        let samples = (0..len)
            .map(|i| {
                let t = i as f64 / len as f64;
                Sample::new(
                    1000.0 * (6.0 * t).sin(),
                    500.0 * (4.0 * t + 1.0).cos(),
                    300.0 + 200.0 * (3.0 * t).sin(),
                    900.0 + 40.0 * t,
                    450.0 - 30.0 * (2.0 * t).sin(),
                )
            })
            .collect();
        RawSignature::new("u", SignatureKind::Genuine, None, samples).unwrap()
    }

    #[test]
    fn extract_builds_normalized_fifteen_columns() {
        let m = extract(&sinusoid_signature(120), DeltaConfig::default()).unwrap();
        assert_eq!(m.cols(), 15);
        assert_eq!(m.rows(), 120);
        let names: Vec<String> = m.columns().iter().map(ToString::to_string).collect();
        assert_eq!(names[..5], ["x", "y", "p", "az", "al"]);
        assert_eq!(names[5], "dx");
        assert_eq!(names[10], "ddx");
        for j in 0..15 {
            let c = m.column(j);
            assert_abs_diff_eq!(mean(&c), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(population_std(&c), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn extract_accepts_minimum_length() {
        let cfg = DeltaConfig::default();
        let m = extract(&sinusoid_signature(cfg.min_len()), cfg).unwrap();
        assert_eq!(m.rows(), 5);
        assert!(extract(&sinusoid_signature(4), cfg).is_err());
    }

    #[test]
    fn extract_is_bit_deterministic() {
        let s = sinusoid_signature(64);
        let a = extract(&s, DeltaConfig::default()).unwrap();
        let b = extract(&s, DeltaConfig::default()).unwrap();
        assert!(a
            .data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    fn series(min: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, min..60)
    }

    proptest! {
        #[test]
        fn delta_is_linear(s in series(7), a in -10f64..10.0, b in -10f64..10.0, m in 1usize..4) {
            let u: Vec<f64> = s.iter().rev().map(|v| v * 0.5 + 3.0).collect();
            let mix: Vec<f64> = s.iter().zip(&u).map(|(x, y)| a * x + b * y).collect();
            let c = cfg(m);
            let lhs = delta(&mix, c).unwrap();
            let ds = delta(&s, c).unwrap();
            let du = delta(&u, c).unwrap();
            let scale = s.iter().chain(&u).fold(1.0f64, |acc, v| acc.max(v.abs())) * (a.abs() + b.abs() + 1.0);
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (a * ds[i] + b * du[i])).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn delta_shift_equivariant_in_interior(s in series(12), m in 1usize..3, shift in 1usize..4) {
            let c = cfg(m);
            let shifted = &s[shift..];
            prop_assume!(shifted.len() >= c.min_len());
            let d = delta(&s, c).unwrap();
            let ds = delta(shifted, c).unwrap();
            for n in m..shifted.len().saturating_sub(m) {
                prop_assert!((ds[n] - d[n + shift]).abs() <= 1e-9 * (1.0 + d[n + shift].abs()));
            }
        }

        #[test]
        fn zscore_idempotent(s in series(2)) {
            prop_assume!(population_std(&s) > 1e-6);
            let z = zscore(&s);
            let zz = zscore(&z);
            for (a, b) in z.iter().zip(&zz) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}
