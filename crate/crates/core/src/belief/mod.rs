//! Complete belief filters: the regularized-SVGD update pipeline
//! (propagate, weight, displace, correlation-regularized SVGD, temporal
//! force), its ablation variants, and the bootstrap SIR baseline.

mod kde;

use std::time::Instant;

use crate::corrproj::{corr_reg_force, init_projections, optimize_projections, ProjectionBank};
use crate::envs::{EnvModel, Observation};
use crate::error::{Error, Result};
use crate::numkit::{median_bandwidth, rbf_kernel_grad, Matrix, ParticleSet};
use crate::rng::{stream, Rng};
use crate::scalar::Real;
use crate::stein::{assemble_direction, evaluate_scores, noise_variance, repulsion_scale};
use crate::targets::{fd_score, LOG_LIKELIHOOD_FLOOR};
use crate::temporal::{optimize_directions, temporal_force, TemporalDirections};

/// How the score of the unnormalized posterior is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// Adaptive central finite differences of the observation log
    /// likelihood. The normative path for simulated environments.
    ObservationFd,
    /// Use the environment's analytic score when it provides one, falling
    /// back to finite differences otherwise. Used for analytic targets.
    Analytic,
}

/// Filter configuration. Defaults follow the published hyperparameters:
/// step size 0.01, base bandwidth 0.1, both regularization weights 0.1,
/// five projections, 100 particles.
#[derive(Debug, Clone)]
pub struct EscortConfig<T> {
    pub step_size: T,
    pub bandwidth_base: T,
    pub lambda_corr: T,
    pub lambda_temp: T,
    pub n_proj: usize,
    pub inner_iters: usize,
    /// Displacement strength alpha in (0, 1).
    pub alpha: T,
    pub no_corr: bool,
    pub no_temp: bool,
    /// Replace learned projections with random orthonormal ones.
    pub random_proj: bool,
    pub noise_enabled: bool,
    pub repulsion_scale_enabled: bool,
    /// Multiplicative step-size decay per inner iteration.
    pub step_decay: T,
    /// Projection-optimization schedule (ascent steps / learning rate).
    pub proj_opt_steps: usize,
    pub proj_opt_lr: T,
    /// Temporal-direction optimization steps per belief update.
    pub temporal_opt_steps: usize,
    pub score_mode: ScoreMode,
    /// Add the kernel-density score of the predicted belief to the
    /// observation score (study flag; off by default).
    pub score_includes_prior: bool,
}

impl<T: Real> Default for EscortConfig<T> {
    fn default() -> Self {
        EscortConfig {
            step_size: T::of(0.01),
            bandwidth_base: T::of(0.1),
            lambda_corr: T::of(0.1),
            lambda_temp: T::of(0.1),
            n_proj: 5,
            inner_iters: 10,
            alpha: T::of(0.5),
            no_corr: false,
            no_temp: false,
            random_proj: false,
            noise_enabled: true,
            repulsion_scale_enabled: true,
            step_decay: T::of(0.999),
            proj_opt_steps: 20,
            proj_opt_lr: T::of(0.05),
            temporal_opt_steps: 10,
            score_mode: ScoreMode::ObservationFd,
            score_includes_prior: false,
        }
    }
}

impl<T: Real> EscortConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < T::zero() || self.alpha >= T::one() {
            return Err(Error::contract("alpha must lie in [0, 1)"));
        }
        if self.step_size < T::zero()
            || self.lambda_corr < T::zero()
            || self.lambda_temp < T::zero()
        {
            return Err(Error::contract("negative weights are not allowed"));
        }
        if self.bandwidth_base <= T::zero() {
            return Err(Error::contract("bandwidth base must be positive"));
        }
        if self.n_proj == 0 || self.inner_iters == 0 {
            return Err(Error::contract("n_proj and inner_iters must be positive"));
        }
        Ok(())
    }
}

/// Wall-clock seconds per pipeline phase (the four published cost
/// categories plus score evaluation and the total update time).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimings {
    pub kernel: f64,
    pub svgd: f64,
    pub gswd: f64,
    pub temporal: f64,
    pub score: f64,
    pub total: f64,
}

impl PhaseTimings {
    pub fn add(&mut self, other: &PhaseTimings) {
        self.kernel += other.kernel;
        self.svgd += other.svgd;
        self.gswd += other.gswd;
        self.temporal += other.temporal;
        self.score += other.score;
        self.total += other.total;
    }
}

/// Per-phase random streams owned by one filter instance.
#[derive(Debug, Clone)]
struct FilterStreams {
    transition: Rng,
    noise: Rng,
    projections: Rng,
}

/// Mutable state of one filter instance.
#[derive(Debug, Clone)]
pub struct FilterState<T> {
    pub particles: ParticleSet<T>,
    pub prev_particles: ParticleSet<T>,
    bank: Option<ProjectionBank<T>>,
    directions: Option<TemporalDirections<T>>,
    streams: FilterStreams,
    pub timings: PhaseTimings,
}

impl<T: Real> FilterState<T> {
    pub fn new(initial: ParticleSet<T>, seed: u64) -> Self {
        let prev = initial.clone();
        FilterState {
            particles: initial,
            prev_particles: prev,
            bank: None,
            directions: None,
            streams: FilterStreams {
                transition: Rng::stream(seed, stream::TRANSITION),
                noise: Rng::stream(seed, stream::NOISE),
                projections: Rng::stream(seed, stream::PROJECTIONS),
            },
            timings: PhaseTimings::default(),
        }
    }

    pub fn projection_bank(&self) -> Option<&ProjectionBank<T>> {
        self.bank.as_ref()
    }
}

/// Push every particle through the transition model; the timestep advances.
pub fn propagate<T: Real>(
    x: &ParticleSet<T>,
    action: usize,
    env: &dyn EnvModel<T>,
    rng: &mut Rng,
) -> Result<ParticleSet<T>> {
    let rows: Result<Vec<Vec<T>>> = (0..x.len())
        .map(|i| env.transition(x.particle(i), action, rng))
        .collect();
    let mut out = ParticleSet::from_rows(rows?)?;
    out.set_timestep(x.timestep() + 1);
    Ok(out)
}

/// Raw observation likelihoods, floored at 1e-15 and not normalized.
pub fn observation_weights<T: Real>(
    x: &ParticleSet<T>,
    obs: &Observation<T>,
    action: usize,
    env: &dyn EnvModel<T>,
) -> Result<Vec<T>> {
    let floor = T::of(1e-15);
    (0..x.len())
        .map(|i| {
            let ll = env.obs_loglik(x.particle(i), action, obs)?;
            Ok(ll.exp().max(floor))
        })
        .collect()
}

/// Likelihood-weighted displacement toward the observation-weighted mean:
/// row i = alpha w_i (mu_obs - x_i) with mu_obs = sum_j w_j x_j / sum_j w_j.
pub fn displacement<T: Real>(x: &ParticleSet<T>, weights: &[T], alpha: T) -> Matrix<T> {
    assert_eq!(weights.len(), x.len());
    let n = x.len();
    let d = x.dim();
    let total: T = weights.iter().copied().sum();
    assert!(total > T::zero(), "displacement requires positive total weight");
    let mut mu = vec![T::zero(); d];
    for i in 0..n {
        for (m, v) in mu.iter_mut().zip(x.particle(i)) {
            *m += weights[i] * *v;
        }
    }
    for m in mu.iter_mut() {
        *m /= total;
    }
    let mut out = Matrix::zeros(n, d);
    for i in 0..n {
        let row = out.row_mut(i);
        for (j, v) in x.particle(i).iter().enumerate() {
            row[j] = alpha * weights[i] * (mu[j] - *v);
        }
    }
    out
}

/// Systematic resampling: returns `n` source indices drawn with a single
/// uniform offset over the normalized cumulative weights.
pub fn systematic_resample<T: Real>(weights: &[T], n: usize, rng: &mut Rng) -> Vec<usize> {
    let total: T = weights.iter().copied().sum();
    assert!(total > T::zero(), "resampling requires positive total weight");
    let step = T::one() / T::of(n as f64);
    let mut u = rng.uniform::<T>() * step;
    let mut out = Vec::with_capacity(n);
    let mut acc = T::zero();
    let mut j = 0usize;
    for _ in 0..n {
        while j < weights.len() {
            let upper = acc + weights[j] / total;
            if u < upper || j == weights.len() - 1 {
                break;
            }
            acc = upper;
            j += 1;
        }
        out.push(j);
        u += step;
    }
    out
}

fn add_in_place<T: Real>(x: &mut ParticleSet<T>, delta: &Matrix<T>, scale: T) {
    let n = x.len();
    let d = x.dim();
    let positions = x.positions_mut();
    for i in 0..n {
        let row = positions.row_mut(i);
        let v = delta.row(i);
        for dim in 0..d {
            row[dim] += scale * v[dim];
        }
    }
}

/// One full belief update of the regularized-SVGD filter.
///
/// Pipeline: propagate, weight by the observation likelihood, displace
/// toward the observation-weighted mean, refresh the projection bank,
/// run `inner_iters` SVGD iterations with the correlation force folded into
/// the velocity, apply the temporal transport force against the previous
/// belief, and optionally inject noise. Phase timings accumulate into the
/// filter state.
pub fn escort_update<T: Real>(
    st: &mut FilterState<T>,
    action: usize,
    obs: &Observation<T>,
    env: &dyn EnvModel<T>,
    cfg: &EscortConfig<T>,
) -> Result<()> {
    cfg.validate()?;
    let update_start = Instant::now();
    let prev_snapshot = st.particles.clone();
    let n = st.particles.len();
    let d = st.particles.dim();

    // (1) Transition model.
    let mut x = propagate(&st.particles, action, env, &mut st.streams.transition)?;
    x.ensure_finite("propagate")?;

    // (2) Observation likelihoods. Raw likelihoods are densities of
    // arbitrary scale, so the displacement uses self-normalized importance
    // weights (sum one).
    let w_raw = observation_weights(&x, obs, action, env)?;
    let w_sum: T = w_raw.iter().copied().sum();
    let w_norm: Vec<T> = w_raw.iter().map(|w| *w / w_sum).collect();

    // (3) Model-based displacement.
    let disp = displacement(&x, &w_norm, cfg.alpha);
    add_in_place(&mut x, &disp, T::one());
    x.ensure_finite("displacement")?;

    // (4) Projection-bank refresh. Rank-one projections; banks larger than
    // the state dimension are truncated to d.
    let n_proj = cfg.n_proj.min(d);
    let use_corr = !cfg.no_corr && cfg.lambda_corr > T::zero() && n >= 2;
    if use_corr {
        let t0 = Instant::now();
        if cfg.random_proj {
            st.bank = Some(ProjectionBank::random(
                d,
                n_proj,
                1,
                &mut st.streams.projections,
            )?);
        } else {
            // Target-side samples: importance resample of the propagated
            // particles under the observation weights.
            let idx = systematic_resample(&w_norm, n, &mut st.streams.projections);
            let rows: Vec<Vec<T>> = idx.iter().map(|&i| x.particle(i).to_vec()).collect();
            let p_samples = ParticleSet::from_rows(rows)?;
            let bank = match st.bank.take() {
                None => init_projections(&x, &p_samples, n_proj, 1, &mut st.streams.projections)?,
                Some(bank) => {
                    optimize_projections(&bank, &x, &p_samples, cfg.proj_opt_steps, cfg.proj_opt_lr)?
                }
            };
            st.bank = Some(bank);
        }
        st.timings.gswd += t0.elapsed().as_secs_f64();
    }

    // (5) Inner SVGD iterations with the correlation force in the velocity.
    let kde_prior = if cfg.score_includes_prior {
        Some(kde::KdeScore::new(&x, cfg.bandwidth_base)?)
    } else {
        None
    };
    let score_fn = |p: &[T]| -> Vec<T> {
        let mut s = match cfg.score_mode {
            ScoreMode::Analytic => env
                .analytic_score(p, action, obs)
                .unwrap_or_else(|| observation_fd_score(env, action, obs, p)),
            ScoreMode::ObservationFd => observation_fd_score(env, action, obs, p),
        };
        if let Some(kde) = &kde_prior {
            let prior = kde.score(p);
            for (a, b) in s.iter_mut().zip(prior) {
                *a += b;
            }
        }
        s
    };

    let rho = if cfg.repulsion_scale_enabled {
        repulsion_scale(d)
    } else {
        T::one()
    };
    let mut eps = cfg.step_size;
    for _ in 0..cfg.inner_iters {
        let t0 = Instant::now();
        let scores = evaluate_scores(&x, &score_fn)?;
        st.timings.score += t0.elapsed().as_secs_f64();

        let direction = if n >= 2 {
            let t0 = Instant::now();
            let h = median_bandwidth(&x, cfg.bandwidth_base)?;
            let (kernel, grads) = rbf_kernel_grad(&x, h)?;
            st.timings.kernel += t0.elapsed().as_secs_f64();

            let t0 = Instant::now();
            let dir = assemble_direction(&scores, &kernel, &grads, rho);
            st.timings.svgd += t0.elapsed().as_secs_f64();
            dir
        } else {
            Matrix::from_rows(scores)
        };

        let t0 = Instant::now();
        let corr = if use_corr {
            corr_reg_force(
                st.bank.as_ref().expect("bank refreshed above"),
                &x,
                cfg.lambda_corr,
            )
        } else {
            Matrix::zeros(n, d)
        };
        st.timings.gswd += t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let velocity = direction.add_scaled(&corr, T::one());
        add_in_place(&mut x, &velocity, eps);
        st.timings.svgd += t0.elapsed().as_secs_f64();
        eps *= cfg.step_decay;
    }
    x.ensure_finite("svgd")?;

    // (6) Temporal transport force against the pre-update belief.
    let use_temp = !cfg.no_temp && cfg.lambda_temp > T::zero();
    if use_temp {
        let t0 = Instant::now();
        let refreshed = match st.directions.take() {
            None => TemporalDirections::init_from(&x, cfg.n_proj, &mut st.streams.projections)?,
            Some(td) => td,
        };
        let refreshed = if n >= 2 && cfg.temporal_opt_steps > 0 {
            optimize_directions(&refreshed, &prev_snapshot, &x, cfg.temporal_opt_steps)?
        } else {
            refreshed
        };
        let force = temporal_force(&prev_snapshot, &x, &refreshed, cfg.lambda_temp)?;
        st.directions = Some(refreshed);
        add_in_place(&mut x, &force, T::one());
        st.timings.temporal += t0.elapsed().as_secs_f64();
        x.ensure_finite("temporal")?;
    }

    // (7) Noise injection, once per belief update.
    if cfg.noise_enabled {
        let std = noise_variance::<T>(d).sqrt();
        let positions = x.positions_mut();
        for i in 0..n {
            let row = positions.row_mut(i);
            for v in row.iter_mut() {
                *v += std * st.streams.noise.normal::<T>();
            }
        }
        x.ensure_finite("noise")?;
    }

    st.prev_particles = prev_snapshot;
    st.particles = x;
    st.timings.total += update_start.elapsed().as_secs_f64();
    Ok(())
}

fn observation_fd_score<T: Real>(
    env: &dyn EnvModel<T>,
    action: usize,
    obs: &Observation<T>,
    p: &[T],
) -> Vec<T> {
    fd_score(
        |q: &[T]| {
            env.obs_loglik(q, action, obs)
                .unwrap_or_else(|_| T::of(LOG_LIKELIHOOD_FLOOR))
        },
        p,
    )
}

/// Bootstrap SIR update: propagate, weight by the observation likelihood,
/// systematic resampling back to n particles (weights implicitly uniform
/// afterwards).
pub fn sir_update<T: Real>(
    x: &ParticleSet<T>,
    action: usize,
    obs: &Observation<T>,
    env: &dyn EnvModel<T>,
    rng: &mut Rng,
) -> Result<ParticleSet<T>> {
    let prop = propagate(x, action, env, rng)?;
    let weights = observation_weights(&prop, obs, action, env)?;
    let idx = systematic_resample(&weights, prop.len(), rng);
    let rows: Vec<Vec<T>> = idx.iter().map(|&i| prop.particle(i).to_vec()).collect();
    let mut out = ParticleSet::from_rows(rows)?;
    out.set_timestep(prop.timestep());
    Ok(out)
}

#[cfg(test)]
mod tests;
