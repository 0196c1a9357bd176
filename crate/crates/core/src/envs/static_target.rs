//! Static-target environment: drives a filter with a fixed density by
//! treating it as the observation likelihood under an identity transition
//! with no noise. Used by the synthetic benchmark suites; both the
//! regularized SVGD filter and the SIR baseline run through it unchanged.

use crate::error::Result;
use crate::numkit::ParticleSet;
use crate::rng::Rng;
use crate::scalar::Real;
use crate::targets::DensityModel;

use super::{check_action, EnvModel, Observation};

pub struct StaticTargetEnv<T, M> {
    model: M,
    /// Initial belief standard deviation (particles drawn from N(0, s^2 I)).
    init_std: T,
}

impl<T: Real, M: DensityModel<T>> StaticTargetEnv<T, M> {
    pub fn new(model: M, init_std: T) -> Self {
        StaticTargetEnv { model, init_std }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<T: Real, M: DensityModel<T> + Send + Sync> EnvModel<T> for StaticTargetEnv<T, M> {
    fn state_dim(&self) -> usize {
        self.model.dim()
    }

    fn obs_dim(&self) -> usize {
        0
    }

    fn num_actions(&self) -> usize {
        1
    }

    fn initial_state(&self, rng: &mut Rng) -> Vec<T> {
        (0..self.model.dim())
            .map(|_| self.init_std * rng.normal::<T>())
            .collect()
    }

    fn initial_belief(&self, n: usize, rng: &mut Rng) -> Result<ParticleSet<T>> {
        let rows = (0..n).map(|_| self.initial_state(rng)).collect();
        ParticleSet::from_rows(rows)
    }

    fn transition(&self, state: &[T], action: usize, _rng: &mut Rng) -> Result<Vec<T>> {
        check_action(self, action)?;
        Ok(state.to_vec())
    }

    fn observe(&self, _state: &[T], action: usize, _rng: &mut Rng) -> Result<Observation<T>> {
        check_action(self, action)?;
        Ok(Observation::empty())
    }

    fn obs_loglik(&self, state: &[T], action: usize, _obs: &Observation<T>) -> Result<T> {
        check_action(self, action)?;
        Ok(self.model.log_density(state))
    }

    fn reward(&self, _state: &[T], _action: usize) -> T {
        T::zero()
    }

    fn is_terminal(&self, _state: &[T]) -> bool {
        false
    }

    fn position(&self, state: &[T]) -> Vec<T> {
        state.to_vec()
    }

    fn max_step_delta(&self) -> T {
        T::zero()
    }

    fn analytic_score(&self, state: &[T], _action: usize, _obs: &Observation<T>) -> Option<Vec<T>> {
        self.model.score(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::benchmark_catalog;

    #[test]
    fn identity_transition_without_noise() {
        let g = benchmark_catalog::<f64>("gmm2d").unwrap();
        let env = StaticTargetEnv::new(g, 2.0);
        let mut rng = Rng::from_seed(1);
        let s = vec![0.3, -0.7];
        let s2 = env.transition(&s, 0, &mut rng).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn loglik_is_the_target_density() {
        let g = benchmark_catalog::<f64>("gmm1d").unwrap();
        let expect = g.log_density_at(&[0.5]).unwrap();
        let env = StaticTargetEnv::new(g, 2.0);
        let got = env
            .obs_loglik(&[0.5], 0, &Observation::empty())
            .unwrap();
        assert_eq!(expect, got);
    }

    #[test]
    fn analytic_score_passes_through() {
        let g = benchmark_catalog::<f64>("gmm2d").unwrap();
        let expect = g.score_at(&[0.2, 0.9]).unwrap();
        let env = StaticTargetEnv::new(g, 2.0);
        let got = env
            .analytic_score(&[0.2, 0.9], 0, &Observation::empty())
            .unwrap();
        assert_eq!(expect, got);
    }
}
