//! Small numerical helpers shared by the simulation and verification layers.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated sum; the result does not depend on how the input was produced,
/// only on its order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
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

/// Pairwise sum over a slice in a fixed tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// A Monte-Carlo estimate with its standard error and seed provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

impl EstimateCI {
    /// Mean and standard error of the mean, reduced pairwise in index order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = pairwise_sum(samples) / n as f64;
        let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 {
            pairwise_sum(&dev) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
            seed,
        }
    }
}

/// Kolmogorov–Smirnov distance `sup |F_n − F|` of a sample against a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `n` points spaced evenly in `log` between `lo` and `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (l + (h - l) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Chebyshev–Lobatto points on `[0, 1]`, clustered at both ends.
pub fn chebyshev_unit_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (n - 1) as f64;
            0.5 * (1.0 - theta.cos())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = EstimateCI::from_samples(&[1.0; 500], 7);
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.n, 500);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance(&s, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
    }

    #[test]
    fn slope_of_line() {
        let x = lin_grid(0.0, 3.0, 10);
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 1.5 * v).collect();
        assert!((ls_slope(&x, &y) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = log_grid(1e-3, 1e-1, 5);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[4] - 1e-1).abs() < 1e-15);
        let c = chebyshev_unit_grid(65);
        assert_eq!(c[0], 0.0);
        assert!((c[64] - 1.0).abs() < 1e-15);
    }
}
