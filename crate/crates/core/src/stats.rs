//! Deterministic aggregation of per-path samples.

use alloc::vec::Vec;

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation with a fixed split, so the result depends only
/// on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Monte Carlo mean with its standard error `sd / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// `mean` is NaN for an empty sample and `se` is NaN when `n < 2`.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = pairwise_sum(samples) / n as f64;
        let se = if n < 2 {
            f64::NAN
        } else {
            let dev: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
            let var = pairwise_sum(&dev) / (n - 1) as f64;
            libm::sqrt(var / n as f64)
        };
        Self { mean, se, n }
    }

    /// `|mean - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}
