//! Generative POMDP environments with analytically evaluable observation
//! likelihoods, plus a static wrapper that drives filters with a fixed
//! target density.

mod data;
mod kidnapped;
mod lightdark;
mod static_target;
mod tracking;

pub use data::{env_data_hash, EnvData, LandmarkSpec, LightRegion, ZoneSpec};
pub use kidnapped::{KidnappedRobot, ACTION_FORWARD, ACTION_STAY, ACTION_TURN_LEFT, ACTION_TURN_RIGHT};
pub use lightdark::LightDark;
pub use static_target::StaticTargetEnv;
pub use tracking::{TargetTracking, ACTION_MINUS_X, ACTION_MINUS_Y, ACTION_PLUS_X, ACTION_PLUS_Y};

use crate::error::{Error, Result};
use crate::numkit::{cholesky, symmetric_eigen, Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;

/// An observation vector with per-slot availability: slots marked
/// unobserved contribute nothing to the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub values: Vec<T>,
    pub observed: Vec<bool>,
}

impl<T: Real> Observation<T> {
    pub fn full(values: Vec<T>) -> Self {
        let observed = vec![true; values.len()];
        Observation { values, observed }
    }

    pub fn empty() -> Self {
        Observation {
            values: Vec::new(),
            observed: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Generative POMDP interface: transition sampler, observation sampler and
/// likelihood, reward, initial-state and initial-belief samplers.
pub trait EnvModel<T: Real>: Send + Sync {
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;

    /// Draw a ground-truth initial state.
    fn initial_state(&self, rng: &mut Rng) -> Vec<T>;

    /// Draw an initial belief particle cloud from the prior knowledge the
    /// agent starts with.
    fn initial_belief(&self, n: usize, rng: &mut Rng) -> Result<ParticleSet<T>>;

    /// Sample the next state.
    fn transition(&self, state: &[T], action: usize, rng: &mut Rng) -> Result<Vec<T>>;

    /// Sample an observation of `state` reached via `action`.
    fn observe(&self, state: &[T], action: usize, rng: &mut Rng) -> Result<Observation<T>>;

    /// Log likelihood of `obs` under the hypothesized state, floored at
    /// ln(1e-15). Swap/confusion branches are marginalized with their stated
    /// probabilities; unobserved slots contribute zero terms.
    fn obs_loglik(&self, state: &[T], action: usize, obs: &Observation<T>) -> Result<T>;

    fn reward(&self, state: &[T], action: usize) -> T;

    fn is_terminal(&self, state: &[T]) -> bool;

    /// Coordinates used by the position-error metric.
    fn position(&self, state: &[T]) -> Vec<T>;

    /// Documented per-environment bound on the single-step state change.
    fn max_step_delta(&self) -> T;

    /// Analytic score of the observation log likelihood when one exists.
    /// Environments without one return None and filters fall back to finite
    /// differences.
    fn analytic_score(&self, state: &[T], action: usize, obs: &Observation<T>) -> Option<Vec<T>> {
        let _ = (state, action, obs);
        None
    }
}

fn check_action<T: Real>(env: &dyn EnvModel<T>, action: usize) -> Result<()> {
    if action >= env.num_actions() {
        return Err(Error::contract(format!(
            "invalid action {action}, environment has {} actions",
            env.num_actions()
        )));
    }
    Ok(())
}

/// Build a Cholesky factor for correlated noise from a correlation pattern
/// and a per-dimension standard deviation.
///
/// The published coupling patterns are not jointly positive definite, so the
/// pattern is projected to the nearest valid correlation matrix by clipping
/// negative eigenvalues and renormalizing the diagonal; this keeps the
/// stated couplings much closer than a plain diagonal shift would.
fn correlated_noise_factor<T: Real>(
    dim: usize,
    correlations: &[(usize, usize, f64)],
    base_std: &[f64],
) -> Matrix<T> {
    let mut corr = Matrix::<T>::identity(dim);
    for &(i, j, rho) in correlations {
        corr[(i, j)] = T::of(rho);
        corr[(j, i)] = T::of(rho);
    }
    let (vals, vecs) = symmetric_eigen(&corr).expect("noise correlation is symmetric");
    let floor = T::of(1e-6);
    let mut projected = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = T::zero();
            for k in 0..dim {
                acc += vecs[(i, k)] * vals[k].max(floor) * vecs[(j, k)];
            }
            projected[(i, j)] = acc;
        }
    }
    let scale: Vec<T> = (0..dim).map(|i| projected[(i, i)].sqrt()).collect();
    let cov = Matrix::from_fn(dim, dim, |i, j| {
        projected[(i, j)] / (scale[i] * scale[j]) * T::of(base_std[i]) * T::of(base_std[j])
    });
    cholesky(&cov).expect("projected covariance is SPD")
}

/// Correlation matrix implied by a noise pattern (diagnostics and tests).
#[cfg(test)]
pub(crate) fn pattern_correlation<T: Real>(
    dim: usize,
    correlations: &[(usize, usize, f64)],
    base_std: &[f64],
) -> Matrix<T> {
    let factor = correlated_noise_factor::<T>(dim, correlations, base_std);
    let cov = factor.matmul(&factor.transpose());
    crate::numkit::correlation_from_covariance(&cov)
}

fn gaussian_log_pdf<T: Real>(x: T, mean: T, var: T) -> T {
    let tau = T::of(std::f64::consts::TAU);
    -(x - mean) * (x - mean) / (T::of(2.0) * var) - (tau * var).ln() / T::of(2.0)
}
