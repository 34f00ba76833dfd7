//! Across-run aggregation helpers.

use alloc::vec::Vec;

use crate::math;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanStderr {
    /// Summation runs in slice order, so equal inputs give bit-identical output.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanStderr::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            math::sqrt(var / n as f64)
        } else {
            0.0
        };
        MeanStderr { mean, stderr, n }
    }

    /// True when `self ≥ other` up to `k` combined standard errors.
    pub fn dominates(&self, other: &MeanStderr, k: f64) -> bool {
        let se = math::sqrt(self.stderr * self.stderr + other.stderr * other.stderr);
        self.mean >= other.mean - k * se
    }
}

/// Linear-interpolated quantile of already sorted data, `q ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos as usize;
            let hi = (lo + 1).min(n - 1);
            let w = pos - lo as f64;
            sorted[lo] * (1.0 - w) + sorted[hi] * w
        }
    }
}

/// Deciles 0.1..=0.9 of `xs`.
pub fn deciles(xs: &[f64]) -> [f64; 9] {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    core::array::from_fn(|i| quantile_sorted(&v, (i + 1) as f64 / 10.0))
}

/// Fraction of `sorted` that is `≤ x`.
pub fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let m = MeanStderr::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStderr::from_samples(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn quantiles_and_ecdf() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert_eq!(quantile_sorted(&v, 0.625), 2.5);
        assert_eq!(ecdf_sorted(&v, 2.0), 0.6);
        assert_eq!(ecdf_sorted(&v, -1.0), 0.0);
        assert_eq!(ecdf_sorted(&v, 9.0), 1.0);
        let d = deciles(&[5.0, 1.0, 3.0]);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }
}
