//! Block averaging and compensated summation.

use serde::{Deserialize, Serialize};

/// Mean with the standard error of block means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub mean: f64,
    /// Standard error of the block means; `NaN` when fewer than two blocks.
    pub sigma: f64,
    pub blocks: usize,
}

impl BlockEstimate {
    pub fn is_degenerate(&self) -> bool {
        !self.sigma.is_finite()
    }

    /// `|x - mean| / sigma`.
    pub fn z_score(&self, x: f64) -> f64 {
        (x - self.mean).abs() / self.sigma
    }
}

/// Splits `series` into `n_blocks` equal consecutive blocks and returns their
/// means. Trailing samples that do not fill a block are dropped.
pub fn block_means(series: &[f64], n_blocks: usize) -> Vec<f64> {
    if n_blocks == 0 || series.is_empty() {
        return Vec::new();
    }
    let n_blocks = n_blocks.min(series.len());
    let len = series.len() / n_blocks;
    series
        .chunks_exact(len)
        .take(n_blocks)
        .map(|b| neumaier_sum(b.iter().copied()) / len as f64)
        .collect()
}

/// Mean and standard error over already-formed block means.
pub fn from_block_means(means: &[f64]) -> BlockEstimate {
    let n = means.len();
    if n == 0 {
        return BlockEstimate { mean: 0.0, sigma: f64::NAN, blocks: 0 };
    }
    let mean = neumaier_sum(means.iter().copied()) / n as f64;
    let sigma = if n < 2 {
        f64::NAN
    } else {
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    BlockEstimate { mean, sigma, blocks: n }
}

pub fn block_estimate(series: &[f64], n_blocks: usize) -> BlockEstimate {
    from_block_means(&block_means(series, n_blocks))
}

/// Neumaier-compensated sum; order independent to within rounding of the
/// compensation term.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Combined standard error of a difference of independent estimates.
pub fn combine_sigma(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_of_a_ramp() {
        let series: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let means = block_means(&series, 5);
        assert_eq!(means, vec![0.5, 2.5, 4.5, 6.5, 8.5]);
        let est = from_block_means(&means);
        assert_eq!(est.mean, 4.5);
        // sample variance of the block means is 10, so sigma = sqrt(10/5)
        assert!((est.sigma - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_block_is_degenerate() {
        let est = block_estimate(&[4.0], 32);
        assert_eq!(est.mean, 4.0);
        assert!(est.is_degenerate());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(v), 2.0);
    }
}
