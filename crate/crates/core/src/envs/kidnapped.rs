//! Kidnapped-robot localization on a 20x20 map with perceptually aliased
//! landmarks.
//!
//! State (20D): position (x, y), orientation theta, speed v, steering s,
//! five sensor-calibration parameters and a ten-dimensional unit feature
//! descriptor. Observations are egocentric: (distance, feature-similarity)
//! pairs for the nearest landmarks inside sensor range and field of view,
//! ordered by distance and carrying no landmark identity. Repeated landmark
//! triads therefore make distant poses produce near-identical observations.

use crate::error::Result;
use crate::numkit::{Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;
use crate::targets::LOG_LIKELIHOOD_FLOOR;

use super::data::EnvData;
use super::{check_action, correlated_noise_factor, gaussian_log_pdf, EnvModel, Observation};

const DIM: usize = 20;
// State layout.
const IX: usize = 0;
const IY: usize = 1;
const ITH: usize = 2;
const IV: usize = 3;
const IS: usize = 4;
const ICAL: usize = 5; // 5 calibration dims
const IFEAT: usize = 10; // 10 feature dims

const DT: f64 = 1.0;
const TURN: f64 = 0.1;
const CRUISE_SPEED: f64 = 0.5;
const SENSOR_RANGE: f64 = 5.0;
/// Half-angle of the 90-degree field of view.
const FOV_HALF: f64 = std::f64::consts::FRAC_PI_4;
/// Feature-descriptor perturbation scale.
const FEATURE_STD: f64 = 0.1;
const OBS_DIST_STD: f64 = 0.1;
const OBS_SIM_STD: f64 = 0.1;
/// Per-slot penalty when predicted and observed visibility disagree.
const MISS_LOG: f64 = -13.815510557964274; // ln(1e-6)
/// Number of nearest-landmark slots in the observation vector.
const MAX_SLOTS: usize = 4;

pub const ACTION_TURN_LEFT: usize = 0;
pub const ACTION_TURN_RIGHT: usize = 1;
pub const ACTION_FORWARD: usize = 2;
pub const ACTION_STAY: usize = 3;

#[derive(Debug, Clone)]
struct Landmark<T> {
    x: T,
    y: T,
    descriptor: Vec<T>,
}

pub struct KidnappedRobot<T> {
    landmarks: Vec<Landmark<T>>,
    noise_factor: Matrix<T>,
}

impl<T: Real> KidnappedRobot<T> {
    pub fn new(data: &EnvData) -> Result<Self> {
        let landmarks = data
            .landmarks
            .iter()
            .map(|l| Landmark {
                x: T::of(l.x),
                y: T::of(l.y),
                descriptor: descriptor_for(&l.kind, l.descriptor_seed),
            })
            .collect();

        // Correlated process noise: position-orientation 0.6,
        // position-velocity 0.8, calibration internal 0.4, calibration to
        // features 0.3. Base scales: pose 0.05, angles/speeds 0.02,
        // calibration 0.01, features 0.1.
        let mut patt: Vec<(usize, usize, f64)> = vec![
            (IX, ITH, 0.6),
            (IY, ITH, 0.6),
            (IX, IV, 0.8),
            (IY, IV, 0.8),
        ];
        for a in ICAL..IFEAT {
            for b in (a + 1)..IFEAT {
                patt.push((a, b, 0.4));
            }
            for f in IFEAT..DIM {
                patt.push((a, f, 0.3));
            }
        }
        let mut stds = [0.0f64; DIM];
        stds[IX] = 0.05;
        stds[IY] = 0.05;
        stds[ITH] = 0.02;
        stds[IV] = 0.02;
        stds[IS] = 0.02;
        for s in stds.iter_mut().take(IFEAT).skip(ICAL) {
            *s = 0.01;
        }
        for s in stds.iter_mut().skip(IFEAT) {
            *s = FEATURE_STD;
        }
        let noise_factor = correlated_noise_factor(DIM, &patt, &stds);
        Ok(KidnappedRobot {
            landmarks,
            noise_factor,
        })
    }

    pub fn num_landmarks(&self) -> usize {
        self.landmarks.len()
    }

    /// Visibility of landmark `j` from a pose: within sensor range and the
    /// 90-degree field of view.
    fn visible(&self, state: &[T], j: usize) -> bool {
        let l = &self.landmarks[j];
        let dx = l.x - state[IX];
        let dy = l.y - state[IY];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist > T::of(SENSOR_RANGE) {
            return false;
        }
        let bearing = dy.as_f64().atan2(dx.as_f64());
        let diff = angle_diff(bearing, state[ITH].as_f64());
        diff.abs() <= FOV_HALF
    }

    fn predicted_pair(&self, state: &[T], j: usize) -> (T, T) {
        let l = &self.landmarks[j];
        let dx = l.x - state[IX];
        let dy = l.y - state[IY];
        let dist = (dx * dx + dy * dy).sqrt();
        let sim: T = state[IFEAT..DIM]
            .iter()
            .zip(&l.descriptor)
            .map(|(a, b)| *a * *b)
            .sum();
        (dist, sim)
    }

    /// Egocentric observation slots predicted from a pose: the nearest
    /// visible landmarks by distance (ties broken by landmark index),
    /// truncated to the slot budget.
    fn predicted_slots(&self, state: &[T]) -> Vec<(T, T)> {
        let mut pairs: Vec<(T, T)> = (0..self.landmarks.len())
            .filter(|&j| self.visible(state, j))
            .map(|j| self.predicted_pair(state, j))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
        pairs.truncate(MAX_SLOTS);
        pairs
    }
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % std::f64::consts::TAU;
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    }
    if d < -std::f64::consts::PI {
        d += std::f64::consts::TAU;
    }
    d
}

/// Type descriptors are fixed unit vectors; each landmark instance carries a
/// small seeded perturbation, so instances of one type look nearly identical.
fn descriptor_for<T: Real>(kind: &str, seed: u64) -> Vec<T> {
    let mut kind_hash: u64 = 0xcbf29ce484222325;
    for b in kind.as_bytes() {
        kind_hash ^= *b as u64;
        kind_hash = kind_hash.wrapping_mul(0x100000001b3);
    }
    let mut base_rng = Rng::stream(0xDE5C_0000, kind_hash);
    let base: Vec<f64> = base_rng.unit_vector(10);
    let mut inst_rng = Rng::stream(0xDE5C_1111, seed);
    let mut v: Vec<f64> = base
        .iter()
        .map(|b| b + FEATURE_STD * inst_rng.normal::<f64>())
        .collect();
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v.into_iter().map(T::of).collect()
}

fn normalize_features<T: Real>(state: &mut [T]) {
    let norm: T = state[IFEAT..DIM]
        .iter()
        .map(|x| *x * *x)
        .sum::<T>()
        .sqrt();
    if norm > T::of(1e-12) {
        for f in state[IFEAT..DIM].iter_mut() {
            *f /= norm;
        }
    } else {
        state[IFEAT] = T::one();
        for f in state[IFEAT + 1..DIM].iter_mut() {
            *f = T::zero();
        }
    }
}

impl<T: Real> EnvModel<T> for KidnappedRobot<T> {
    fn state_dim(&self) -> usize {
        DIM
    }

    fn obs_dim(&self) -> usize {
        2 * MAX_SLOTS
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn initial_state(&self, rng: &mut Rng) -> Vec<T> {
        let mut s = vec![T::zero(); DIM];
        s[IX] = rng.uniform_range(T::of(2.0), T::of(18.0));
        s[IY] = rng.uniform_range(T::of(2.0), T::of(18.0));
        s[ITH] = rng.uniform_range(T::zero(), T::of(std::f64::consts::TAU));
        s[IV] = T::of(0.25);
        let inv = T::one() / T::of(10.0f64.sqrt());
        for f in s[IFEAT..DIM].iter_mut() {
            *f = inv + T::of(FEATURE_STD) * rng.normal::<T>();
        }
        normalize_features(&mut s);
        s
    }

    fn initial_belief(&self, n: usize, rng: &mut Rng) -> Result<ParticleSet<T>> {
        // The robot has been kidnapped: position belief spans the whole map.
        let rows: Vec<Vec<T>> = (0..n)
            .map(|_| {
                let mut s = vec![T::zero(); DIM];
                s[IX] = rng.uniform_range(T::zero(), T::of(20.0));
                s[IY] = rng.uniform_range(T::zero(), T::of(20.0));
                s[ITH] = rng.uniform_range(T::zero(), T::of(std::f64::consts::TAU));
                s[IV] = T::of(0.25) + T::of(0.05) * rng.normal::<T>();
                s[IS] = T::of(0.02) * rng.normal::<T>();
                for c in s[ICAL..IFEAT].iter_mut() {
                    *c = T::of(0.01) * rng.normal::<T>();
                }
                let inv = T::one() / T::of(10.0f64.sqrt());
                for f in s[IFEAT..DIM].iter_mut() {
                    *f = inv + T::of(FEATURE_STD) * rng.normal::<T>();
                }
                normalize_features(&mut s);
                s
            })
            .collect();
        ParticleSet::from_rows(rows)
    }

    fn transition(&self, state: &[T], action: usize, rng: &mut Rng) -> Result<Vec<T>> {
        check_action(self, action)?;
        let z: Vec<T> = rng.normal_vec(DIM);
        let noise = self.noise_factor.matvec(&z);
        let mut next = state.to_vec();
        let theta = state[ITH].as_f64();
        next[IX] = state[IX] + state[IV] * T::of(theta.cos() * DT) + noise[IX];
        next[IY] = state[IY] + state[IV] * T::of(theta.sin() * DT) + noise[IY];
        let dtheta = match action {
            ACTION_TURN_LEFT => T::of(TURN),
            ACTION_TURN_RIGHT => T::of(-TURN),
            _ => T::zero(),
        };
        next[ITH] = state[ITH] + dtheta + noise[ITH];
        next[IV] = match action {
            // Relax toward cruise speed when driving, decay when stopped.
            ACTION_FORWARD => state[IV] + T::of(0.5) * (T::of(CRUISE_SPEED) - state[IV]),
            ACTION_STAY => state[IV] * T::of(0.5),
            _ => state[IV],
        } + noise[IV];
        next[IS] = dtheta + noise[IS];
        for i in ICAL..DIM {
            next[i] = state[i] + noise[i];
        }
        normalize_features(&mut next);
        Ok(next)
    }

    fn observe(&self, state: &[T], action: usize, rng: &mut Rng) -> Result<Observation<T>> {
        check_action(self, action)?;
        let slots = self.predicted_slots(state);
        let mut values = vec![T::zero(); 2 * MAX_SLOTS];
        let mut observed = vec![false; 2 * MAX_SLOTS];
        for (k, (dist, sim)) in slots.into_iter().enumerate() {
            values[2 * k] = dist + T::of(OBS_DIST_STD) * rng.normal::<T>();
            values[2 * k + 1] = sim + T::of(OBS_SIM_STD) * rng.normal::<T>();
            observed[2 * k] = true;
            observed[2 * k + 1] = true;
        }
        Ok(Observation { values, observed })
    }

    fn obs_loglik(&self, state: &[T], action: usize, obs: &Observation<T>) -> Result<T> {
        check_action(self, action)?;
        let predicted = self.predicted_slots(state);
        let mut ll = T::zero();
        let dist_var = T::of(OBS_DIST_STD * OBS_DIST_STD);
        let sim_var = T::of(OBS_SIM_STD * OBS_SIM_STD);
        for k in 0..MAX_SLOTS {
            let seen = obs.observed[2 * k];
            match (seen, predicted.get(k)) {
                (true, Some((dist, sim))) => {
                    ll += gaussian_log_pdf(obs.values[2 * k], *dist, dist_var);
                    ll += gaussian_log_pdf(obs.values[2 * k + 1], *sim, sim_var);
                }
                (false, None) => {}
                // Slot-count mismatch: fixed penalty per slot.
                _ => ll += T::of(MISS_LOG),
            }
        }
        Ok(ll.max(T::of(LOG_LIKELIHOOD_FLOOR)))
    }

    fn reward(&self, _state: &[T], _action: usize) -> T {
        T::of(-1.0)
    }

    fn is_terminal(&self, _state: &[T]) -> bool {
        // Episodes end on the runner's step limit.
        false
    }

    fn position(&self, state: &[T]) -> Vec<T> {
        vec![state[IX], state[IY]]
    }

    fn max_step_delta(&self) -> T {
        // Speed stays near cruise (0.5) plus noise; feature renormalization
        // contributes a bounded shift.
        T::of(1.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> KidnappedRobot<f64> {
        KidnappedRobot::new(&EnvData::load_default().unwrap()).unwrap()
    }

    fn facing_state(x: f64, y: f64, theta: f64) -> Vec<f64> {
        let mut s = vec![0.0; DIM];
        s[IX] = x;
        s[IY] = y;
        s[ITH] = theta;
        s[IV] = 0.5;
        s[IFEAT] = 1.0;
        s
    }

    #[test]
    fn range_limit_controls_visibility() {
        let e = env();
        // Landmark `tower` sits at (10, 11). Face it from below.
        let tower = e
            .landmarks
            .iter()
            .position(|l| (l.x - 10.0).abs() < 1e-9 && (l.y - 11.0).abs() < 1e-9)
            .unwrap();
        let near = facing_state(10.0, 8.0, std::f64::consts::FRAC_PI_2);
        assert!(e.visible(&near, tower), "distance 3 should be visible");
        let far = facing_state(10.0, 5.0, std::f64::consts::FRAC_PI_2);
        assert!(!e.visible(&far, tower), "distance 6 exceeds range 5");
        // In range but behind the robot.
        let behind = facing_state(10.0, 8.0, -std::f64::consts::FRAC_PI_2);
        assert!(!e.visible(&behind, tower));
    }

    #[test]
    fn features_stay_unit_norm_after_every_step() {
        let e = env();
        let mut rng = Rng::from_seed(3);
        let mut s = e.initial_state(&mut rng);
        for step in 0..200 {
            s = e.transition(&s, step % 4, &mut rng).unwrap();
            let norm: f64 = s[IFEAT..DIM].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "step {step}: norm {norm}");
        }
    }

    #[test]
    fn reward_is_minus_one_per_step() {
        let e = env();
        let mut rng = Rng::from_seed(4);
        let s = e.initial_state(&mut rng);
        for a in 0..4 {
            assert_eq!(e.reward(&s, a), -1.0);
        }
    }

    #[test]
    fn same_type_landmarks_have_similar_descriptors() {
        let e = env();
        let data = EnvData::load_default().unwrap();
        let idx = |name: &str| data.landmarks.iter().position(|l| l.name == name).unwrap();
        let dot = |a: usize, b: usize| -> f64 {
            e.landmarks[a]
                .descriptor
                .iter()
                .zip(&e.landmarks[b].descriptor)
                .map(|(u, v)| u * v)
                .sum()
        };
        // Aliasing by construction: triad members of one type nearly match.
        assert!(dot(idx("house_a"), idx("house_b")) > 0.9);
        assert!(dot(idx("shop_a"), idx("shop_c")) > 0.9);
        // Distinct types are clearly separated.
        assert!(dot(idx("house_a"), idx("tower")) < 0.8);
    }

    #[test]
    fn aliased_poses_have_comparable_likelihoods() {
        let e = env();
        let mut rng = Rng::from_seed(9);
        // Stand south-east of triad A facing north, so the three slot
        // distances are well separated; the rotated pose at triad B sees the
        // same local pattern.
        let pose_a = facing_state(10.5, 13.8, std::f64::consts::FRAC_PI_2);
        let obs = e.observe(&pose_a, ACTION_STAY, &mut rng).unwrap();
        assert!(obs.observed.iter().any(|o| *o), "triad A should be visible");
        let ll_true = e.obs_loglik(&pose_a, ACTION_STAY, &obs).unwrap();
        // The same relative pose at the second triad, rotated by 120 degrees
        // about the map center.
        let (s, c) = 120.0f64.to_radians().sin_cos();
        let (rel_x, rel_y) = (10.5 - 10.0, 13.8 - 10.0);
        let pose_b = facing_state(
            10.0 + c * rel_x - s * rel_y,
            10.0 + s * rel_x + c * rel_y,
            std::f64::consts::FRAC_PI_2 + 120.0f64.to_radians(),
        );
        let ll_alias = e.obs_loglik(&pose_b, ACTION_STAY, &obs).unwrap();
        // An unrelated pose in open space sees nothing.
        let pose_far = facing_state(18.0, 10.0, 0.0);
        let ll_far = e.obs_loglik(&pose_far, ACTION_STAY, &obs).unwrap();
        assert!(
            ll_alias > ll_far + 5.0,
            "aliased pose {ll_alias} should clearly beat unrelated pose {ll_far}"
        );
        assert!(
            ll_true >= ll_alias,
            "true pose {ll_true} vs aliased {ll_alias}"
        );
    }
}
