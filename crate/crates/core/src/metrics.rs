//! Distribution-approximation metrics: MMD, sliced Wasserstein, mode
//! coverage, correlation error and RMSE, plus per-seed aggregation.

use crate::error::{Error, Result};
use crate::numkit::{correlation_matrix, pairwise_sq_dist, wasserstein1_1d, Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;

/// Maximum mean discrepancy with RBF kernel exp(-gamma ||x - y||^2).
/// Returns sqrt(max(0, MMD^2)) of the biased V-statistic.
pub fn mmd<T: Real>(x: &ParticleSet<T>, y: &ParticleSet<T>, gamma: T) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension {
            context: "mmd",
            expected: x.dim(),
            got: y.dim(),
        });
    }
    // Cross terms accumulate in both traversal orders and average, so the
    // result is exactly symmetric in the two arguments.
    let kernel_mean = |a: &ParticleSet<T>, b: &ParticleSet<T>| -> Result<T> {
        let sq = pairwise_sq_dist(a, b)?;
        let mut row_major = T::zero();
        for v in sq.data() {
            row_major += (-gamma * *v).exp();
        }
        let mut col_major = T::zero();
        for j in 0..sq.cols() {
            for i in 0..sq.rows() {
                col_major += (-gamma * sq[(i, j)]).exp();
            }
        }
        let count = T::of((a.len() * b.len()) as f64);
        Ok((row_major + col_major) / (T::of(2.0) * count))
    };
    let xx = kernel_mean(x, x)?;
    let yy = kernel_mean(y, y)?;
    let xy = kernel_mean(x, y)?;
    let sq = xx + yy - T::of(2.0) * xy;
    Ok(sq.max(T::zero()).sqrt())
}

/// Sliced 1-Wasserstein distance: mean over `n_dirs` uniformly random unit
/// directions of the rank-matched 1D transport cost of the projections.
/// Requires equal particle counts; deterministic given the rng seed.
pub fn sliced_wasserstein<T: Real>(
    x: &ParticleSet<T>,
    y: &ParticleSet<T>,
    n_dirs: usize,
    rng: &mut Rng,
) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            context: "sliced_wasserstein",
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.dim() != y.dim() {
        return Err(Error::Dimension {
            context: "sliced_wasserstein dims",
            expected: x.dim(),
            got: y.dim(),
        });
    }
    if n_dirs == 0 {
        return Err(Error::contract("sliced_wasserstein requires n_dirs >= 1"));
    }
    let mut acc = T::zero();
    for _ in 0..n_dirs {
        let dir: Vec<T> = rng.unit_vector(x.dim());
        let a = x.project(&dir);
        let b = y.project(&dir);
        acc += wasserstein1_1d(&a, &b)?.0;
    }
    Ok(acc / T::of(n_dirs as f64))
}

/// Mode coverage ratio: the fraction of modes whose tau-ball holds more than
/// a 0.05/K share of the particles.
pub fn mode_coverage<T: Real>(x: &ParticleSet<T>, modes: &[Vec<T>], tau: T) -> T {
    assert!(!modes.is_empty(), "mode list must be non-empty");
    let k = modes.len();
    let threshold = T::of(0.05) / T::of(k as f64);
    let n = T::of(x.len() as f64);
    let tau_sq = tau * tau;
    let mut covered = 0usize;
    for mode in modes {
        let mut hits = 0usize;
        for i in 0..x.len() {
            let dist: T = x
                .particle(i)
                .iter()
                .zip(mode)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum();
            if dist < tau_sq {
                hits += 1;
            }
        }
        if T::of(hits as f64) / n > threshold {
            covered += 1;
        }
    }
    T::of(covered as f64) / T::of(k as f64)
}

/// Frobenius norm of the difference between the true correlation matrix and
/// the sample correlation of the particles.
pub fn correlation_error<T: Real>(x: &ParticleSet<T>, c_true: &Matrix<T>) -> Result<T> {
    if c_true.rows() != x.dim() || c_true.cols() != x.dim() {
        return Err(Error::Dimension {
            context: "correlation_error",
            expected: x.dim(),
            got: c_true.rows(),
        });
    }
    let c = correlation_matrix(x)?;
    Ok(c.add_scaled(c_true, -T::one()).frobenius_norm())
}

/// Root mean square error between paired state estimates and ground truths.
pub fn rmse<T: Real>(estimates: &[Vec<T>], truths: &[Vec<T>]) -> Result<T> {
    if estimates.len() != truths.len() {
        return Err(Error::Dimension {
            context: "rmse",
            expected: estimates.len(),
            got: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::contract("rmse requires at least one pair"));
    }
    let mut acc = T::zero();
    for (e, t) in estimates.iter().zip(truths) {
        if e.len() != t.len() {
            return Err(Error::Dimension {
                context: "rmse pair",
                expected: e.len(),
                got: t.len(),
            });
        }
        acc += e
            .iter()
            .zip(t)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>();
    }
    Ok((acc / T::of(estimates.len() as f64)).sqrt())
}

/// Mean and standard error (sample std / sqrt(count)) of per-seed values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
}

pub fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len();
    assert!(n > 0, "cannot summarize zero values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, stderr }
}
