//! Sample covariance and correlation matrices.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::matrix::{Matrix, ParticleSet};

/// Variance floor applied to the diagonal before normalizing correlations,
/// so constant dimensions do not divide by zero.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Sample covariance matrix (denominator n - 1).
pub fn covariance_matrix<T: Real>(x: &ParticleSet<T>) -> Result<Matrix<T>> {
    if x.len() < 2 {
        return Err(Error::contract("covariance requires n >= 2"));
    }
    let n = x.len();
    let d = x.dim();
    let mean = x.mean();
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = x.particle(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    let denom = T::of((n - 1) as f64);
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}

/// Correlation matrix C_ij = Sigma_ij / sqrt(Sigma_ii * Sigma_jj) with a
/// variance floor on the diagonal. The result is symmetric, has a unit
/// diagonal and entries clamped to [-1, 1].
pub fn correlation_matrix<T: Real>(x: &ParticleSet<T>) -> Result<Matrix<T>> {
    let cov = covariance_matrix(x)?;
    Ok(correlation_from_covariance(&cov))
}

/// Normalize a covariance matrix to a correlation matrix.
pub fn correlation_from_covariance<T: Real>(cov: &Matrix<T>) -> Matrix<T> {
    let d = cov.rows();
    let floor = T::of(VARIANCE_FLOOR);
    let std: Vec<T> = (0..d).map(|i| cov[(i, i)].max(floor).sqrt()).collect();
    let mut corr = Matrix::zeros(d, d);
    for a in 0..d {
        corr[(a, a)] = T::one();
        for b in (a + 1)..d {
            let v = (cov[(a, b)] / (std[a] * std[b]))
                .max(-T::one())
                .min(T::one());
            corr[(a, b)] = v;
            corr[(b, a)] = v;
        }
    }
    corr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn perfect_positive_and_negative_correlation() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let v = i as f64 * 0.3 - 2.0;
                vec![v, v, -v]
            })
            .collect();
        let x = ParticleSet::from_rows(rows).unwrap();
        let c = correlation_matrix(&x).unwrap();
        assert!((c[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((c[(0, 2)] + 1.0).abs() < 1e-12);
        assert_eq!(c[(0, 0)], 1.0);
    }

    #[test]
    fn monte_carlo_correlated_gaussian() {
        // 2000 samples from a 2D Gaussian with rho = 0.8 built from
        // independent normals: x2 = 0.8 x1 + sqrt(1 - 0.64) z.
        let mut rng = Rng::from_seed(99);
        let rows: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                let z1: f64 = rng.normal();
                let z2: f64 = rng.normal();
                vec![z1, 0.8 * z1 + (1.0f64 - 0.64).sqrt() * z2]
            })
            .collect();
        let x = ParticleSet::from_rows(rows).unwrap();
        let c = correlation_matrix(&x).unwrap();
        assert!((c[(0, 1)] - 0.8).abs() < 0.05, "got {}", c[(0, 1)]);
    }

    #[test]
    fn requires_two_samples() {
        let x = ParticleSet::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        assert!(correlation_matrix(&x).is_err());
    }

    #[test]
    fn constant_dimension_uses_variance_floor() {
        let x = ParticleSet::from_rows(vec![vec![1.0f64, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]])
            .unwrap();
        let c = correlation_matrix(&x).unwrap();
        assert!(c[(0, 1)].is_finite());
        assert!(c[(0, 1)].abs() <= 1.0);
        assert_eq!(c[(1, 1)], 1.0);
    }
}
