//! Multi-target tracking with zone-dependent observability.
//!
//! A 20D state holds an agent (position + velocity) and four targets that
//! drift on a gentle swirl field with flocking-correlated noise. Four
//! visibility zones modulate observation quality: full view, limited
//! sensing, a confusion zone with identity swaps, and a blind spot.

use crate::error::Result;
use crate::numkit::{Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;
use crate::targets::LOG_LIKELIHOOD_FLOOR;

use super::data::{EnvData, ZoneSpec};
use super::{check_action, correlated_noise_factor, gaussian_log_pdf, EnvModel, Observation};

const DIM: usize = 20;
const N_TARGETS: usize = 4;
const DT: f64 = 1.0;
const DAMPING: f64 = 0.1;
const ACCEL: f64 = 0.05;
/// Swirl strength: |F| = 0.02 at radius five from the arena center.
const SWIRL: f64 = 0.004;
const REPULSE_RADIUS: f64 = 1.0;
const REPULSE_GAIN: f64 = 0.05;
const POS_NOISE: f64 = 0.03;
const VEL_NOISE: f64 = 0.05;
const AGENT_OBS_STD: f64 = 0.05;
/// Baseline target observation noise at full visibility.
const TARGET_OBS_STD_MIN: f64 = 0.1;
/// Identity-swap probability inside the confusion zone.
const SWAP_PROB: f64 = 0.3;
/// Half-angle of the agent's 60-degree field of view (targets only).
const FOV_HALF: f64 = std::f64::consts::FRAC_PI_6;
/// Below this speed the agent is treated as scanning in every direction.
const FOV_MIN_SPEED: f64 = 0.05;
const MISS_LOG: f64 = -13.815510557964274; // ln(1e-6)
const GOAL_RADIUS: f64 = 0.5;
const COLLISION_RADIUS: f64 = 0.5;
const ARENA: f64 = 10.0;

pub const ACTION_PLUS_X: usize = 0;
pub const ACTION_MINUS_X: usize = 1;
pub const ACTION_PLUS_Y: usize = 2;
pub const ACTION_MINUS_Y: usize = 3;

pub struct TargetTracking<T> {
    zones: Vec<ZoneSpec>,
    goal: [f64; 2],
    starts: Vec<[f64; 2]>,
    noise_factor: Matrix<T>,
}

#[inline]
fn agent_slice(i: usize) -> usize {
    i
}

#[inline]
fn target_base(t: usize) -> usize {
    4 + 4 * t
}

impl<T: Real> TargetTracking<T> {
    pub fn new(data: &EnvData) -> Result<Self> {
        // Correlations: position-velocity coupling 0.8 within every entity,
        // flocking couplings between targets (positions 0.4, velocities 0.6).
        let mut patt: Vec<(usize, usize, f64)> = Vec::new();
        for e in 0..(1 + N_TARGETS) {
            let b = if e == 0 { 0 } else { target_base(e - 1) };
            patt.push((b, b + 2, 0.8));
            patt.push((b + 1, b + 3, 0.8));
        }
        for a in 0..N_TARGETS {
            for b in (a + 1)..N_TARGETS {
                let ba = target_base(a);
                let bb = target_base(b);
                patt.push((ba, bb, 0.4));
                patt.push((ba + 1, bb + 1, 0.4));
                patt.push((ba + 2, bb + 2, 0.6));
                patt.push((ba + 3, bb + 3, 0.6));
            }
        }
        let mut stds = [0.0f64; DIM];
        for e in 0..(1 + N_TARGETS) {
            let b = if e == 0 { 0 } else { target_base(e - 1) };
            stds[b] = POS_NOISE;
            stds[b + 1] = POS_NOISE;
            stds[b + 2] = VEL_NOISE;
            stds[b + 3] = VEL_NOISE;
        }
        Ok(TargetTracking {
            zones: data.zones.clone(),
            goal: data.tracking_goal,
            starts: data.target_starts.clone(),
            noise_factor: correlated_noise_factor(DIM, &patt, &stds),
        })
    }

    /// Visibility factor of the zone containing a point.
    pub fn zone_visibility(&self, x: T, y: T) -> f64 {
        let xf = x.as_f64().clamp(0.0, ARENA - 1e-9);
        let yf = y.as_f64().clamp(0.0, ARENA - 1e-9);
        for z in &self.zones {
            if xf >= z.x0 && xf < z.x1 && yf >= z.y0 && yf < z.y1 {
                return z.visibility;
            }
        }
        0.0
    }

    fn in_confusion_zone(&self, x: T, y: T) -> bool {
        let xf = x.as_f64().clamp(0.0, ARENA - 1e-9);
        let yf = y.as_f64().clamp(0.0, ARENA - 1e-9);
        self.zones
            .iter()
            .find(|z| xf >= z.x0 && xf < z.x1 && yf >= z.y0 && yf < z.y1)
            .map(|z| z.name == "confusion")
            .unwrap_or(false)
    }

    fn target_obs_std(visibility: f64) -> f64 {
        TARGET_OBS_STD_MIN + 0.9 * (1.0 - visibility)
    }

    /// A target is reportable when its zone has nonzero visibility and it
    /// lies inside the agent's field of view (omnidirectional when the agent
    /// is nearly stationary).
    fn target_visible(&self, state: &[T], t: usize) -> bool {
        let b = target_base(t);
        if self.zone_visibility(state[b], state[b + 1]) <= 0.0 {
            return false;
        }
        let vx = state[2].as_f64();
        let vy = state[3].as_f64();
        let speed = (vx * vx + vy * vy).sqrt();
        if speed < FOV_MIN_SPEED {
            return true;
        }
        let heading = vy.atan2(vx);
        let dx = (state[b] - state[0]).as_f64();
        let dy = (state[b + 1] - state[1]).as_f64();
        let bearing = dy.atan2(dx);
        let mut diff = (bearing - heading) % std::f64::consts::TAU;
        if diff > std::f64::consts::PI {
            diff -= std::f64::consts::TAU;
        }
        if diff < -std::f64::consts::PI {
            diff += std::f64::consts::TAU;
        }
        diff.abs() <= FOV_HALF
    }

    /// Closest pair of targets inside the confusion zone, if at least two.
    fn confusion_pair(&self, state: &[T]) -> Option<(usize, usize)> {
        let members: Vec<usize> = (0..N_TARGETS)
            .filter(|t| {
                let b = target_base(*t);
                self.in_confusion_zone(state[b], state[b + 1])
            })
            .collect();
        if members.len() < 2 {
            return None;
        }
        let mut best = (members[0], members[1]);
        let mut best_d = T::infinity();
        for (ai, &a) in members.iter().enumerate() {
            for &b in &members[ai + 1..] {
                let pa = target_base(a);
                let pb = target_base(b);
                let dx = state[pa] - state[pb];
                let dy = state[pa + 1] - state[pb + 1];
                let d = dx * dx + dy * dy;
                if d < best_d {
                    best_d = d;
                    best = (a, b);
                }
            }
        }
        Some(best)
    }

    fn goal_distance(&self, state: &[T]) -> T {
        let dx = state[0] - T::of(self.goal[0]);
        let dy = state[1] - T::of(self.goal[1]);
        (dx * dx + dy * dy).sqrt()
    }

    /// Log likelihood of the target slots under a fixed slot assignment.
    fn slots_loglik(&self, state: &[T], obs: &Observation<T>, assign: &[usize; N_TARGETS]) -> T {
        let mut ll = T::zero();
        for t in 0..N_TARGETS {
            let slot = assign[t];
            let seen = obs.observed[2 + 2 * slot];
            let predicted = self.target_visible(state, t);
            match (seen, predicted) {
                (true, true) => {
                    let b = target_base(t);
                    let vis = self.zone_visibility(state[b], state[b + 1]);
                    let std = Self::target_obs_std(vis);
                    let var = T::of(std * std);
                    ll += gaussian_log_pdf(obs.values[2 + 2 * slot], state[b], var);
                    ll += gaussian_log_pdf(obs.values[2 + 2 * slot + 1], state[b + 1], var);
                }
                (false, false) => {}
                _ => ll += T::of(MISS_LOG),
            }
        }
        ll
    }
}

impl<T: Real> EnvModel<T> for TargetTracking<T> {
    fn state_dim(&self) -> usize {
        DIM
    }

    /// Agent position plus one (x, y) slot per target.
    fn obs_dim(&self) -> usize {
        2 + 2 * N_TARGETS
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn initial_state(&self, rng: &mut Rng) -> Vec<T> {
        let mut s = vec![T::zero(); DIM];
        s[0] = T::one() + T::of(0.05) * rng.normal::<T>();
        s[1] = T::one() + T::of(0.05) * rng.normal::<T>();
        for (t, start) in self.starts.iter().enumerate() {
            let b = target_base(t);
            s[b] = T::of(start[0]) + T::of(0.1) * rng.normal::<T>();
            s[b + 1] = T::of(start[1]) + T::of(0.1) * rng.normal::<T>();
        }
        s
    }

    fn initial_belief(&self, n: usize, rng: &mut Rng) -> Result<ParticleSet<T>> {
        let rows: Vec<Vec<T>> = (0..n)
            .map(|_| {
                let mut s = vec![T::zero(); DIM];
                s[0] = T::one() + T::of(0.05) * rng.normal::<T>();
                s[1] = T::one() + T::of(0.05) * rng.normal::<T>();
                s[2] = T::of(0.03) * rng.normal::<T>();
                s[3] = T::of(0.03) * rng.normal::<T>();
                for (t, start) in self.starts.iter().enumerate() {
                    let b = target_base(t);
                    s[b] = T::of(start[0]) + T::of(0.3) * rng.normal::<T>();
                    s[b + 1] = T::of(start[1]) + T::of(0.3) * rng.normal::<T>();
                    s[b + 2] = T::of(0.05) * rng.normal::<T>();
                    s[b + 3] = T::of(0.05) * rng.normal::<T>();
                }
                s
            })
            .collect();
        ParticleSet::from_rows(rows)
    }

    fn transition(&self, state: &[T], action: usize, rng: &mut Rng) -> Result<Vec<T>> {
        check_action(self, action)?;
        let z: Vec<T> = rng.normal_vec(DIM);
        let noise = self.noise_factor.matvec(&z);
        let mut next = vec![T::zero(); DIM];

        // Agent: damped acceleration in the commanded direction.
        let (ax, ay) = match action {
            ACTION_PLUS_X => (ACCEL, 0.0),
            ACTION_MINUS_X => (-ACCEL, 0.0),
            ACTION_PLUS_Y => (0.0, ACCEL),
            _ => (0.0, -ACCEL),
        };
        let keep = T::one() - T::of(DAMPING);
        next[2] = state[2] * keep + T::of(ax) + noise[agent_slice(2)];
        next[3] = state[3] * keep + T::of(ay) + noise[agent_slice(3)];
        next[0] = state[0] + next[2] * T::of(DT) + noise[0];
        next[1] = state[1] + next[3] * T::of(DT) + noise[1];

        // Targets: damping, swirl flow, short-range mutual repulsion.
        for t in 0..N_TARGETS {
            let b = target_base(t);
            let px = state[b];
            let py = state[b + 1];
            let fx = T::of(-SWIRL) * (py - T::of(5.0));
            let fy = T::of(SWIRL) * (px - T::of(5.0));
            let mut rx = T::zero();
            let mut ry = T::zero();
            for other in 0..N_TARGETS {
                if other == t {
                    continue;
                }
                let ob = target_base(other);
                let dx = px - state[ob];
                let dy = py - state[ob + 1];
                let dist = (dx * dx + dy * dy).sqrt();
                if dist < T::of(REPULSE_RADIUS) && dist > T::of(1e-9) {
                    let push = T::of(REPULSE_GAIN) * (T::of(REPULSE_RADIUS) - dist) / dist;
                    rx += push * dx;
                    ry += push * dy;
                }
            }
            next[b + 2] = state[b + 2] * keep + fx + rx + noise[b + 2];
            next[b + 3] = state[b + 3] * keep + fy + ry + noise[b + 3];
            next[b] = px + next[b + 2] * T::of(DT) + noise[b];
            next[b + 1] = py + next[b + 3] * T::of(DT) + noise[b + 1];
        }

        // Keep every entity inside the arena.
        for e in 0..(1 + N_TARGETS) {
            let b = if e == 0 { 0 } else { target_base(e - 1) };
            next[b] = next[b].max(T::zero()).min(T::of(ARENA));
            next[b + 1] = next[b + 1].max(T::zero()).min(T::of(ARENA));
        }
        Ok(next)
    }

    fn observe(&self, state: &[T], action: usize, rng: &mut Rng) -> Result<Observation<T>> {
        check_action(self, action)?;
        let m = self.obs_dim();
        let mut values = vec![T::zero(); m];
        let mut observed = vec![false; m];
        values[0] = state[0] + T::of(AGENT_OBS_STD) * rng.normal::<T>();
        values[1] = state[1] + T::of(AGENT_OBS_STD) * rng.normal::<T>();
        observed[0] = true;
        observed[1] = true;
        for t in 0..N_TARGETS {
            if self.target_visible(state, t) {
                let b = target_base(t);
                let vis = self.zone_visibility(state[b], state[b + 1]);
                let std = T::of(Self::target_obs_std(vis));
                values[2 + 2 * t] = state[b] + std * rng.normal::<T>();
                values[2 + 2 * t + 1] = state[b + 1] + std * rng.normal::<T>();
                observed[2 + 2 * t] = true;
                observed[2 + 2 * t + 1] = true;
            }
        }
        // Identity confusion: swap the closest observed pair inside the
        // confusion zone with probability 0.3.
        if let Some((a, b)) = self.confusion_pair(state) {
            if observed[2 + 2 * a] && observed[2 + 2 * b] && rng.uniform::<f64>() < SWAP_PROB {
                values.swap(2 + 2 * a, 2 + 2 * b);
                values.swap(2 + 2 * a + 1, 2 + 2 * b + 1);
            }
        }
        Ok(Observation { values, observed })
    }

    fn obs_loglik(&self, state: &[T], action: usize, obs: &Observation<T>) -> Result<T> {
        check_action(self, action)?;
        let mut ll = T::zero();
        let avar = T::of(AGENT_OBS_STD * AGENT_OBS_STD);
        ll += gaussian_log_pdf(obs.values[0], state[0], avar);
        ll += gaussian_log_pdf(obs.values[1], state[1], avar);

        let identity: [usize; N_TARGETS] = [0, 1, 2, 3];
        let base = self.slots_loglik(state, obs, &identity);
        let swap = self.confusion_pair(state).and_then(|(a, b)| {
            if obs.observed[2 + 2 * a] && obs.observed[2 + 2 * b] {
                let mut assign = identity;
                assign.swap(a, b);
                Some(self.slots_loglik(state, obs, &assign))
            } else {
                None
            }
        });
        ll += match swap {
            // Marginalize over the swap branches: 0.7 identity + 0.3 swap.
            Some(swapped) => {
                let t1 = T::of((1.0 - SWAP_PROB).ln()) + base;
                let t2 = T::of(SWAP_PROB.ln()) + swapped;
                let m = t1.max(t2);
                m + ((t1 - m).exp() + (t2 - m).exp()).ln()
            }
            None => base,
        };
        Ok(ll.max(T::of(LOG_LIKELIHOOD_FLOOR)))
    }

    fn reward(&self, state: &[T], action: usize) -> T {
        let _ = action;
        let mut r = T::of(-0.1) * self.goal_distance(state) - T::of(0.05);
        for t in 0..N_TARGETS {
            let b = target_base(t);
            let dx = state[0] - state[b];
            let dy = state[1] - state[b + 1];
            if (dx * dx + dy * dy).sqrt() < T::of(COLLISION_RADIUS) {
                r -= T::one();
            }
        }
        r
    }

    fn is_terminal(&self, state: &[T]) -> bool {
        self.goal_distance(state) < T::of(GOAL_RADIUS)
    }

    fn position(&self, state: &[T]) -> Vec<T> {
        vec![state[0], state[1]]
    }

    fn max_step_delta(&self) -> T {
        T::of(2.5)
    }
}
