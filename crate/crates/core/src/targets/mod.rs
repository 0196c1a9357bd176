//! Target densities: the log-density/score abstraction, the analytic
//! Gaussian-mixture family, the adaptive finite-difference score, and the
//! synthetic benchmark catalog.

mod catalog;

pub use catalog::{benchmark_catalog, FIXED_TARGETS};

use crate::error::{Error, Result};
use crate::numkit::{cholesky, cholesky_solve, correlation_from_covariance, Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;

/// Floor on log densities so far-tail evaluations stay finite: ln(1e-300).
pub const LOG_DENSITY_FLOOR: f64 = -690.775527898214;
/// Observation-likelihood floor before logs: ln(1e-15).
pub const LOG_LIKELIHOOD_FLOOR: f64 = -34.538776394910684;
/// Finite-difference scores are clipped to [-SCORE_CLIP, SCORE_CLIP].
pub const SCORE_CLIP: f64 = 100.0;

/// A target density exposing its log density and, when available, an
/// analytic score (gradient of the log density).
pub trait DensityModel<T: Real> {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[T]) -> T;
    fn score(&self, x: &[T]) -> Option<Vec<T>> {
        let _ = x;
        None
    }
}

#[derive(Debug, Clone)]
struct Component<T> {
    log_weight: T,
    weight: T,
    mean: Vec<T>,
    cov: Matrix<T>,
    chol: Matrix<T>,
    /// Precomputed inverse covariance for score evaluation.
    inv: Matrix<T>,
    /// -0.5 (d ln 2pi + ln det Sigma)
    log_norm: T,
}

/// Weighted Gaussian mixture with SPD covariances.
#[derive(Debug, Clone)]
pub struct GmmSpec<T> {
    components: Vec<Component<T>>,
    dim: usize,
}

impl<T: Real> GmmSpec<T> {
    /// Build a mixture from (weight, mean, covariance) triples.
    ///
    /// Weights must be positive and sum to one within 1e-9; every covariance
    /// must be symmetric positive definite.
    pub fn new(components: Vec<(T, Vec<T>, Matrix<T>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::contract("mixture needs at least one component"));
        }
        let dim = components[0].1.len();
        let mut total = T::zero();
        let mut built = Vec::with_capacity(components.len());
        for (k, (w, mean, cov)) in components.into_iter().enumerate() {
            if w <= T::zero() {
                return Err(Error::contract(format!("component {k}: weight must be positive")));
            }
            if mean.len() != dim || cov.rows() != dim || cov.cols() != dim {
                return Err(Error::Dimension {
                    context: "GmmSpec::new",
                    expected: dim,
                    got: mean.len(),
                });
            }
            if cov.asymmetry() > T::of(1e-9) * cov.max_abs().max(T::one()) {
                return Err(Error::contract(format!("component {k}: covariance not symmetric")));
            }
            let chol = cholesky(&cov).map_err(|_| {
                Error::contract(format!("component {k}: covariance not positive definite"))
            })?;
            let inv = crate::numkit::spd_inverse(&cov)?;
            let log_det = (0..dim)
                .map(|i| chol[(i, i)].ln())
                .sum::<T>()
                * T::of(2.0);
            let log_norm =
                -(T::of(dim as f64) * T::of(std::f64::consts::TAU).ln() + log_det) / T::of(2.0);
            total += w;
            built.push(Component {
                log_weight: w.ln(),
                weight: w,
                mean,
                cov,
                chol,
                inv,
                log_norm,
            });
        }
        if (total - T::one()).abs() > T::of(1e-9) {
            return Err(Error::contract(format!("weights sum to {total}, expected 1")));
        }
        Ok(GmmSpec {
            components: built,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Component means (the mode locations used by coverage metrics).
    pub fn modes(&self) -> Vec<Vec<T>> {
        self.components.iter().map(|c| c.mean.clone()).collect()
    }

    pub fn weights(&self) -> Vec<T> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn covariance(&self, k: usize) -> &Matrix<T> {
        &self.components[k].cov
    }

    /// Mixture mean: sum_k w_k mu_k.
    pub fn mixture_mean(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for c in &self.components {
            for (o, m) in out.iter_mut().zip(&c.mean) {
                *o += c.weight * *m;
            }
        }
        out
    }

    /// Mixture covariance by the law of total covariance:
    /// sum_k w_k (Sigma_k + mu_k mu_k^T) - mu mu^T.
    pub fn mixture_covariance(&self) -> Matrix<T> {
        let mu = self.mixture_mean();
        let mut cov = Matrix::zeros(self.dim, self.dim);
        for c in &self.components {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    cov[(i, j)] += c.weight * (c.cov[(i, j)] + c.mean[i] * c.mean[j]);
                }
            }
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                cov[(i, j)] -= mu[i] * mu[j];
            }
        }
        cov
    }

    /// Correlation matrix of the full mixture (ground truth for the
    /// correlation-error metric).
    pub fn mixture_correlation(&self) -> Matrix<T> {
        correlation_from_covariance(&self.mixture_covariance())
    }

    fn component_log_density(&self, k: usize, x: &[T]) -> T {
        let c = &self.components[k];
        let delta: Vec<T> = x.iter().zip(&c.mean).map(|(a, b)| *a - *b).collect();
        let solved = cholesky_solve(&c.chol, &delta);
        let quad = delta
            .iter()
            .zip(&solved)
            .map(|(a, b)| *a * *b)
            .sum::<T>();
        c.log_norm - quad / T::of(2.0)
    }

    fn check_dim(&self, x: &[T], context: &'static str) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                context,
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Log mixture density via log-sum-exp, floored at ln(1e-300).
    pub fn log_density_at(&self, x: &[T]) -> Result<T> {
        self.check_dim(x, "gmm_log_density")?;
        Ok(self.log_density_unchecked(x))
    }

    fn log_density_unchecked(&self, x: &[T]) -> T {
        let terms: Vec<T> = (0..self.components.len())
            .map(|k| self.components[k].log_weight + self.component_log_density(k, x))
            .collect();
        log_sum_exp(&terms).max(T::of(LOG_DENSITY_FLOOR))
    }

    /// Analytic mixture score: sum_k r_k(x) Sigma_k^{-1} (mu_k - x) with
    /// responsibilities computed in log space.
    pub fn score_at(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x, "gmm_score")?;
        let terms: Vec<T> = (0..self.components.len())
            .map(|k| self.components[k].log_weight + self.component_log_density(k, x))
            .collect();
        let lse = log_sum_exp(&terms);
        let mut out = vec![T::zero(); self.dim];
        for (k, c) in self.components.iter().enumerate() {
            let resp = (terms[k] - lse).exp();
            if resp == T::zero() {
                continue;
            }
            let toward: Vec<T> = c.mean.iter().zip(x).map(|(m, xi)| *m - *xi).collect();
            let pull = c.inv.matvec(&toward);
            for (o, p) in out.iter_mut().zip(&pull) {
                *o += resp * *p;
            }
        }
        Ok(out)
    }

    /// Draw `n` samples: pick a component by weight, then mean + L z with L
    /// the Cholesky factor of its covariance.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<ParticleSet<T>> {
        if n == 0 {
            return Err(Error::contract("gmm_sample requires n >= 1"));
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let u: T = rng.uniform();
            let mut acc = T::zero();
            let mut pick = self.components.len() - 1;
            for (k, c) in self.components.iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            let c = &self.components[pick];
            let z: Vec<T> = rng.normal_vec(self.dim);
            let lz = c.chol.matvec(&z);
            rows.push(
                c.mean
                    .iter()
                    .zip(&lz)
                    .map(|(m, v)| *m + *v)
                    .collect::<Vec<T>>(),
            );
        }
        ParticleSet::from_rows(rows)
    }
}

impl<T: Real> DensityModel<T> for GmmSpec<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[T]) -> T {
        self.log_density_unchecked(x)
    }

    fn score(&self, x: &[T]) -> Option<Vec<T>> {
        self.score_at(x).ok()
    }
}

fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let m = terms.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
    if !m.is_finite() {
        return m;
    }
    let sum = terms.iter().map(|t| (*t - m).exp()).sum::<T>();
    m + sum.ln()
}

/// Adaptive finite-difference score of a black-box log density.
///
/// Each dimension uses step eps_j = max(1e-6, 1e-4 |x_j|); log densities are
/// floored at ln(1e-15) before differencing and every output component is
/// clipped to [-100, 100].
pub fn fd_score<T: Real>(log_density: impl Fn(&[T]) -> T, x: &[T]) -> Vec<T> {
    let floor = T::of(LOG_LIKELIHOOD_FLOOR);
    let clip = T::of(SCORE_CLIP);
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let eps = T::of(1e-6).max(T::of(1e-4) * x[j].abs());
        probe[j] = x[j] + eps;
        let up = log_density(&probe).max(floor);
        probe[j] = x[j] - eps;
        let down = log_density(&probe).max(floor);
        probe[j] = x[j];
        let g = (up - down) / (T::of(2.0) * eps);
        let g = if g.is_finite() { g } else { T::zero() };
        out.push(g.max(-clip).min(clip));
    }
    out
}
