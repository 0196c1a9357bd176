//! Temporal-consistency regularization: discretized generalized sliced
//! Wasserstein distance between consecutive beliefs, momentum-based
//! direction optimization, and the transport-matching force with clipping
//! and a nearest-neighbor fallback.

use crate::error::{Error, Result};
use crate::numkit::{covariance_matrix, symmetric_eigen, wasserstein1_1d, Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;

/// Components of the temporal force are clipped to [-10, 10].
pub const FORCE_CLIP: f64 = 10.0;
/// Finite-difference perturbation for direction gradients.
const FD_EPS: f64 = 1e-6;
/// Momentum coefficient of the direction update.
const MOMENTUM: f64 = 0.9;
/// Base learning rate and per-step decay of the direction update.
const DIRECTION_LR: f64 = 0.05;
const DIRECTION_LR_DECAY: f64 = 0.99;

/// A set of unit projection directions with importance weights and the
/// per-direction momentum state of the optimizer.
#[derive(Debug, Clone)]
pub struct TemporalDirections<T> {
    directions: Vec<Vec<T>>,
    weights: Vec<T>,
    momentum: Vec<Vec<T>>,
}

impl<T: Real> TemporalDirections<T> {
    pub fn new(directions: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        if directions.is_empty() || directions.len() != weights.len() {
            return Err(Error::contract("directions and weights must match and be non-empty"));
        }
        let d = directions[0].len();
        for (i, dir) in directions.iter().enumerate() {
            if dir.len() != d {
                return Err(Error::Dimension {
                    context: "TemporalDirections::new",
                    expected: d,
                    got: dir.len(),
                });
            }
            let norm: T = dir.iter().map(|x| *x * *x).sum::<T>().sqrt();
            if (norm - T::one()).abs() > T::of(1e-9) {
                return Err(Error::contract(format!("direction {i} is not unit length")));
            }
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::of(1e-9) || weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::contract("direction weights must be non-negative and sum to 1"));
        }
        let momentum = vec![vec![T::zero(); d]; directions.len()];
        Ok(TemporalDirections {
            directions,
            weights,
            momentum,
        })
    }

    /// Initialization: top covariance eigenvectors of the current belief,
    /// padded with random unit vectors, uniform weights.
    pub fn init_from(curr: &ParticleSet<T>, n_dirs: usize, rng: &mut Rng) -> Result<Self> {
        if n_dirs == 0 {
            return Err(Error::contract("need at least one direction"));
        }
        let d = curr.dim();
        let mut directions = Vec::with_capacity(n_dirs);
        if curr.len() >= 2 {
            let cov = covariance_matrix(curr)?;
            if cov.frobenius_norm() > T::of(1e-12) {
                let (_, vecs) = symmetric_eigen(&cov)?;
                for c in 0..d.min(n_dirs) {
                    let col = vecs.col(c);
                    let norm: T = col.iter().map(|x| *x * *x).sum::<T>().sqrt();
                    if norm > T::of(1e-9) {
                        directions.push(col.into_iter().map(|x| x / norm).collect());
                    }
                }
            }
        }
        while directions.len() < n_dirs {
            directions.push(rng.unit_vector(d));
        }
        let w = T::one() / T::of(n_dirs as f64);
        let mut weights = vec![w; n_dirs];
        let sum: T = weights.iter().copied().sum();
        if let Some(last) = weights.last_mut() {
            *last += T::one() - sum;
        }
        Self::new(directions, weights)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn direction(&self, i: usize) -> &[T] {
        &self.directions[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[cfg(test)]
    pub(crate) fn overwrite_direction_for_test(&mut self, i: usize, dir: Vec<T>) {
        self.directions[i] = dir;
    }
}

fn check_pair<T: Real>(prev: &ParticleSet<T>, curr: &ParticleSet<T>) -> Result<()> {
    if prev.len() != curr.len() {
        return Err(Error::Dimension {
            context: "temporal particle counts",
            expected: prev.len(),
            got: curr.len(),
        });
    }
    if prev.dim() != curr.dim() {
        return Err(Error::Dimension {
            context: "temporal particle dims",
            expected: prev.dim(),
            got: curr.dim(),
        });
    }
    Ok(())
}

/// Discretized generalized sliced Wasserstein distance between consecutive
/// beliefs: sum_i w_i W1(theta_i^T prev, theta_i^T curr).
pub fn gswd<T: Real>(
    prev: &ParticleSet<T>,
    curr: &ParticleSet<T>,
    td: &TemporalDirections<T>,
) -> Result<T> {
    check_pair(prev, curr)?;
    let mut acc = T::zero();
    for (dir, w) in td.directions.iter().zip(&td.weights) {
        let a = prev.project(dir);
        let b = curr.project(dir);
        let (dist, _) = wasserstein1_1d(&a, &b)?;
        acc += *w * dist;
    }
    Ok(acc)
}

fn projected_w1<T: Real>(prev: &ParticleSet<T>, curr: &ParticleSet<T>, dir: &[T]) -> Result<T> {
    let a = prev.project(dir);
    let b = curr.project(dir);
    Ok(wasserstein1_1d(&a, &b)?.0)
}

/// Momentum-based refinement of the projection directions.
///
/// Per direction: finite-difference gradient of the projected W1, scaled by
/// the covariance of the current belief (gradients weighted by covariance
/// eigenvalues), momentum update with coefficient 0.9, renormalization to
/// unit length. Steps that decrease the projected W1 or produce non-finite
/// values are rolled back, leaving that direction unchanged. Weights are
/// refreshed proportional to each direction's final projected W1.
pub fn optimize_directions<T: Real>(
    td: &TemporalDirections<T>,
    prev: &ParticleSet<T>,
    curr: &ParticleSet<T>,
    steps: usize,
) -> Result<TemporalDirections<T>> {
    check_pair(prev, curr)?;
    if curr.len() < 2 {
        return Err(Error::contract("optimize_directions requires n >= 2"));
    }
    let d = curr.dim();
    let cov = covariance_matrix(curr)?;
    let (vals, _) = symmetric_eigen(&cov)?;
    let top = vals[0].max(T::of(1e-12));

    let mut out = td.clone();
    let eps = T::of(FD_EPS);
    for idx in 0..out.len() {
        let mut w1 = projected_w1(prev, curr, &out.directions[idx])?;
        let mut lr = T::of(DIRECTION_LR);
        for _ in 0..steps {
            let theta = out.directions[idx].clone();
            // Finite-difference gradient of W1 with respect to theta.
            let mut grad = vec![T::zero(); d];
            let mut probe = theta.clone();
            let mut finite = true;
            for j in 0..d {
                probe[j] = theta[j] + eps;
                let up = projected_w1(prev, curr, &probe)?;
                probe[j] = theta[j] - eps;
                let down = projected_w1(prev, curr, &probe)?;
                probe[j] = theta[j];
                let g = (up - down) / (T::of(2.0) * eps);
                if !g.is_finite() {
                    finite = false;
                    break;
                }
                grad[j] = g;
            }
            if !finite {
                break;
            }
            // Weight the gradient by the covariance spectrum: multiplying by
            // Cov/lambda_max scales each eigencomponent by its eigenvalue.
            let weighted = cov.matvec(&grad);
            let weighted: Vec<T> = weighted.into_iter().map(|g| g / top).collect();

            let saved_momentum = out.momentum[idx].clone();
            for (m, g) in out.momentum[idx].iter_mut().zip(&weighted) {
                *m = T::of(MOMENTUM) * *m + lr * *g;
            }
            let mut candidate: Vec<T> = theta
                .iter()
                .zip(&out.momentum[idx])
                .map(|(t, m)| *t + *m)
                .collect();
            let norm: T = candidate.iter().map(|x| *x * *x).sum::<T>().sqrt();
            let ok = norm > T::of(1e-12) && norm.is_finite();
            if ok {
                for c in candidate.iter_mut() {
                    *c /= norm;
                }
            }
            let value = if ok {
                projected_w1(prev, curr, &candidate)?
            } else {
                T::nan()
            };
            if value.is_finite() && value + T::of(1e-12) >= w1 {
                out.directions[idx] = candidate;
                w1 = value;
            } else {
                out.momentum[idx] = saved_momentum;
            }
            lr *= T::of(DIRECTION_LR_DECAY);
        }
    }

    // Refresh weights proportional to per-direction transport cost.
    let costs: Vec<T> = out
        .directions
        .iter()
        .map(|dir| projected_w1(prev, curr, dir))
        .collect::<Result<_>>()?;
    let total: T = costs.iter().copied().sum();
    if total > T::of(1e-12) {
        out.weights = costs.iter().map(|c| *c / total).collect();
        let sum: T = out.weights.iter().copied().sum();
        if let Some(last) = out.weights.last_mut() {
            *last += T::one() - sum;
        }
    }
    Ok(out)
}

/// Transport-matching force pulling current particles toward their matched
/// previous-belief partners:
/// row i = clip( lambda_temp sum_j w_j (prev[sigma_j(i)] - curr[i]), +/-10 ).
///
/// A direction whose projections produce non-finite values falls back to
/// nearest-neighbor matching in the full state space.
pub fn temporal_force<T: Real>(
    prev: &ParticleSet<T>,
    curr: &ParticleSet<T>,
    td: &TemporalDirections<T>,
    lambda_temp: T,
) -> Result<Matrix<T>> {
    check_pair(prev, curr)?;
    let n = curr.len();
    let d = curr.dim();
    let mut out = Matrix::zeros(n, d);
    if lambda_temp == T::zero() {
        return Ok(out);
    }

    let mut nn_cache: Option<Vec<usize>> = None;
    for (dir, w) in td.directions.iter().zip(&td.weights) {
        let a = curr.project(dir);
        let b = prev.project(dir);
        let finite = a.iter().chain(b.iter()).all(|v| v.is_finite());
        let matching = if finite {
            wasserstein1_1d(&a, &b)?.1
        } else {
            nn_cache
                .get_or_insert_with(|| nearest_neighbor_matching(prev, curr))
                .clone()
        };
        for i in 0..n {
            let p = prev.particle(matching[i]);
            let c = curr.particle(i);
            let row = out.row_mut(i);
            for j in 0..d {
                row[j] += *w * (p[j] - c[j]);
            }
        }
    }

    let clip = T::of(FORCE_CLIP);
    for i in 0..n {
        let row = out.row_mut(i);
        for v in row.iter_mut() {
            *v = (lambda_temp * *v).max(-clip).min(clip);
        }
    }
    Ok(out)
}

/// For each current particle, the index of the closest previous particle.
fn nearest_neighbor_matching<T: Real>(prev: &ParticleSet<T>, curr: &ParticleSet<T>) -> Vec<usize> {
    (0..curr.len())
        .map(|i| {
            let c = curr.particle(i);
            let mut best = 0usize;
            let mut best_d = T::infinity();
            for j in 0..prev.len() {
                let p = prev.particle(j);
                let dist: T = c
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (*a - *b) * (*a - *b))
                    .sum();
                if dist < best_d {
                    best_d = dist;
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    fn random_set(n: usize, d: usize, seed: u64) -> ParticleSet<f64> {
        let mut rng = Rng::from_seed(seed);
        ParticleSet::from_rows((0..n).map(|_| rng.normal_vec(d)).collect()).unwrap()
    }

    #[test]
    fn gswd_zero_for_identical_beliefs() {
        let x = random_set(20, 3, 1);
        let td = TemporalDirections::init_from(&x, 4, &mut Rng::from_seed(2)).unwrap();
        assert_eq!(gswd(&x, &x, &td).unwrap(), 0.0);
    }

    #[test]
    fn gswd_translation_along_single_direction() {
        let x = random_set(15, 2, 3);
        let dir = unit(vec![1.0, 0.0]);
        let td = TemporalDirections::new(vec![dir], vec![1.0]).unwrap();
        let c = 2.5;
        let shifted_rows: Vec<Vec<f64>> = (0..x.len())
            .map(|i| vec![x.particle(i)[0] + c, x.particle(i)[1]])
            .collect();
        let y = ParticleSet::from_rows(shifted_rows).unwrap();
        let g = gswd(&x, &y, &td).unwrap();
        assert!((g - c).abs() < 1e-12, "gswd {g}");
    }

    #[test]
    fn gswd_matches_independent_recomputation() {
        let prev = random_set(40, 5, 5);
        let curr = random_set(40, 5, 6);
        let td = TemporalDirections::init_from(&curr, 8, &mut Rng::from_seed(7)).unwrap();
        let fast = gswd(&prev, &curr, &td).unwrap();
        // Straightforward oracle: sort both projections, mean |diff|.
        let mut expect = 0.0;
        for (dir, w) in (0..td.len()).map(|i| (td.direction(i), td.weights()[i])) {
            let mut a: Vec<f64> = prev.project(dir);
            let mut b: Vec<f64> = curr.project(dir);
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let w1: f64 =
                a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
            expect += w * w1;
        }
        assert!((fast - expect).abs() < 1e-12, "{fast} vs {expect}");
    }

    #[test]
    fn gswd_is_symmetric() {
        let prev = random_set(25, 4, 8);
        let curr = random_set(25, 4, 9);
        let td = TemporalDirections::init_from(&curr, 5, &mut Rng::from_seed(10)).unwrap();
        let a = gswd(&prev, &curr, &td).unwrap();
        let b = gswd(&curr, &prev, &td).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gswd_zero_iff_projections_match() {
        // Two different clouds whose projections match along the chosen
        // direction: cost zero; along a separating direction: positive.
        let a = ParticleSet::from_rows(vec![vec![0.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = ParticleSet::from_rows(vec![vec![0.0, -2.0], vec![1.0, 5.0]]).unwrap();
        let e1 = TemporalDirections::new(vec![unit(vec![1.0, 0.0])], vec![1.0]).unwrap();
        assert_eq!(gswd(&a, &b, &e1).unwrap(), 0.0);
        let e2 = TemporalDirections::new(vec![unit(vec![0.0, 1.0])], vec![1.0]).unwrap();
        assert!(gswd(&a, &b, &e2).unwrap() > 0.0);
    }

    #[test]
    fn particle_count_mismatch_rejected() {
        let a = random_set(5, 2, 11);
        let b = random_set(6, 2, 12);
        let td = TemporalDirections::init_from(&a, 2, &mut Rng::from_seed(13)).unwrap();
        assert!(gswd(&a, &b, &td).is_err());
    }

    #[test]
    fn optimize_no_change_when_beliefs_identical() {
        let x = random_set(12, 3, 14);
        let td = TemporalDirections::init_from(&x, 3, &mut Rng::from_seed(15)).unwrap();
        let out = optimize_directions(&td, &x, &x, 8).unwrap();
        for i in 0..td.len() {
            for j in 0..3 {
                assert!((out.direction(i)[j] - td.direction(i)[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn optimize_aligns_with_separating_axis() {
        // Sets differing only along e2: the optimized direction picks it up.
        let mut rng = Rng::from_seed(16);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| rng.normal_vec(2)).collect();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[1] + 4.0]).collect();
        let prev = ParticleSet::from_rows(rows).unwrap();
        let curr = ParticleSet::from_rows(shifted).unwrap();
        let start = unit(vec![1.0, 0.4]);
        let td = TemporalDirections::new(vec![start], vec![1.0]).unwrap();
        let out = optimize_directions(&td, &prev, &curr, 60).unwrap();
        let theta = out.direction(0);
        let angle = theta[1].abs().min(1.0).acos();
        assert!(angle < 0.1, "angle to e2: {angle} (theta {theta:?})");
    }

    #[test]
    fn optimize_preserves_unit_norm() {
        let prev = random_set(30, 4, 18);
        let curr = random_set(30, 4, 19);
        let td = TemporalDirections::init_from(&curr, 5, &mut Rng::from_seed(20)).unwrap();
        let out = optimize_directions(&td, &prev, &curr, 10).unwrap();
        for i in 0..out.len() {
            let norm: f64 = out.direction(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "direction {i} norm {norm}");
        }
    }

    #[test]
    fn force_zero_for_identical_beliefs_and_zero_lambda() {
        let x = random_set(10, 3, 21);
        let td = TemporalDirections::init_from(&x, 3, &mut Rng::from_seed(22)).unwrap();
        let f = temporal_force(&x, &x, &td, 0.5).unwrap();
        assert!(f.data().iter().all(|v| *v == 0.0));
        let y = random_set(10, 3, 23);
        let f0 = temporal_force(&x, &y, &td, 0.0).unwrap();
        assert!(f0.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn large_translation_clips_to_exact_bound() {
        let curr = random_set(8, 2, 24);
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![curr.particle(i)[0] + 100.0, curr.particle(i)[1]])
            .collect();
        let prev = ParticleSet::from_rows(rows).unwrap();
        let td = TemporalDirections::new(vec![unit(vec![1.0, 0.0])], vec![1.0]).unwrap();
        let f = temporal_force(&prev, &curr, &td, 1.0).unwrap();
        for i in 0..8 {
            assert_eq!(f[(i, 0)], FORCE_CLIP);
            assert_eq!(f[(i, 1)], 0.0);
        }
    }

    #[test]
    fn force_components_always_within_bounds() {
        let mut rng = Rng::from_seed(25);
        for round in 0..5 {
            let prev = random_set(20, 3, 100 + round);
            let scale = 10f64.powi(round as i32);
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|i| {
                    prev.particle(i)
                        .iter()
                        .map(|v| v * scale + rng.normal::<f64>())
                        .collect()
                })
                .collect();
            let curr = ParticleSet::from_rows(rows).unwrap();
            let td = TemporalDirections::init_from(&curr, 4, &mut rng).unwrap();
            let f = temporal_force(&prev, &curr, &td, 2.0).unwrap();
            for v in f.data() {
                assert!(*v >= -FORCE_CLIP && *v <= FORCE_CLIP);
            }
        }
    }

    #[test]
    fn small_force_step_decreases_gswd_on_translation() {
        let curr = random_set(30, 2, 26);
        let shift = 1.0;
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![curr.particle(i)[0] + shift, curr.particle(i)[1]])
            .collect();
        let prev = ParticleSet::from_rows(rows).unwrap();
        let td = TemporalDirections::new(
            vec![unit(vec![1.0, 0.0]), unit(vec![0.0, 1.0])],
            vec![0.5, 0.5],
        )
        .unwrap();
        let before = gswd(&prev, &curr, &td).unwrap();
        let f = temporal_force(&prev, &curr, &td, 1.0).unwrap();
        let eps = 0.1;
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                curr.particle(i)
                    .iter()
                    .zip(f.row(i))
                    .map(|(x, g)| x + eps * g)
                    .collect()
            })
            .collect();
        let moved = ParticleSet::from_rows(rows).unwrap();
        let after = gswd(&prev, &moved, &td).unwrap();
        assert!(after < before, "gswd {before} -> {after}");
    }

    #[test]
    fn non_finite_direction_falls_back_to_nearest_neighbor() {
        let prev = ParticleSet::from_rows(vec![vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        let curr = ParticleSet::from_rows(vec![vec![9.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let mut td = TemporalDirections::new(vec![unit(vec![1.0, 0.0])], vec![1.0]).unwrap();
        td.overwrite_direction_for_test(0, vec![f64::NAN, 0.0]);
        let f = temporal_force(&prev, &curr, &td, 1.0).unwrap();
        // Nearest neighbors: curr[0] (9,0) -> prev[1] (10,0); curr[1] -> prev[0].
        assert!((f[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((f[(1, 0)] + 1.0).abs() < 1e-12);
    }
}
