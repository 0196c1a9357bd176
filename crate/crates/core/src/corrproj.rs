//! Correlation-aware regularization: projection banks initialized from the
//! eigenvectors of the correlation-difference matrix, projected-difference
//! optimization, the diagnostic penalty on velocity fields, and the
//! closed-form regularization force used inside the belief update.

use crate::error::{Error, Result};
use crate::numkit::{correlation_matrix, symmetric_eigen, Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;

/// Threshold on ||corr(q) - corr(p)||_F below which initialization falls
/// back to random orthonormal directions.
const DEGENERATE_DELTA: f64 = 1e-8;
/// Accepted optimization steps may decrease the objective by at most this.
const OBJECTIVE_TOL: f64 = 1e-6;

/// A bank of projection matrices with importance weights. Every matrix is
/// d x k with orthonormal columns; weights are non-negative and sum to one.
#[derive(Debug, Clone)]
pub struct ProjectionBank<T> {
    matrices: Vec<Matrix<T>>,
    weights: Vec<T>,
}

impl<T: Real> ProjectionBank<T> {
    pub fn new(matrices: Vec<Matrix<T>>, weights: Vec<T>) -> Result<Self> {
        if matrices.is_empty() || matrices.len() != weights.len() {
            return Err(Error::contract("projection bank needs matching matrices and weights"));
        }
        let tol = T::of(1e-8);
        for (idx, a) in matrices.iter().enumerate() {
            let gram = a.transpose().matmul(a);
            let dev = gram
                .add_scaled(&Matrix::identity(a.cols()), -T::one())
                .max_abs();
            if dev > tol {
                return Err(Error::contract(format!(
                    "projection {idx} columns not orthonormal (deviation {dev})"
                )));
            }
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::of(1e-9) || weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::contract("projection weights must be non-negative and sum to 1"));
        }
        Ok(ProjectionBank { matrices, weights })
    }

    /// Random orthonormal bank: m matrices of k columns each.
    pub fn random(d: usize, m: usize, k: usize, rng: &mut Rng) -> Result<Self> {
        if m * k > d {
            return Err(Error::contract("requested more projection columns than dimensions"));
        }
        let uniform = T::one() / T::of(m as f64);
        let mut matrices = Vec::with_capacity(m);
        for _ in 0..m {
            loop {
                let g = Matrix::from_fn(d, k, |_, _| rng.normal());
                if let Some(q) = orthonormalize(&g) {
                    matrices.push(q);
                    break;
                }
            }
        }
        ProjectionBank::new(matrices, vec![uniform; m])
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrix(&self, i: usize) -> &Matrix<T> {
        &self.matrices[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    /// Residual || target_cov - sum_i w_i A_i A_i^T ||_F: a diagnostic for
    /// how well the bank spans a covariance. No pass/fail threshold is
    /// attached.
    pub fn covariance_residual(&self, target_cov: &Matrix<T>) -> T {
        let d = self.dim();
        let mut approx = Matrix::zeros(d, d);
        for (a, w) in self.matrices.iter().zip(&self.weights) {
            let aat = a.matmul(&a.transpose());
            approx = approx.add_scaled(&aat, *w);
        }
        approx.add_scaled(target_cov, -T::one()).frobenius_norm()
    }
}

/// Modified Gram-Schmidt; returns None when the columns are degenerate.
fn orthonormalize<T: Real>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let (d, k) = (m.rows(), m.cols());
    let mut cols: Vec<Vec<T>> = (0..k).map(|j| m.col(j)).collect();
    for j in 0..k {
        for prev in 0..j {
            let dot: T = cols[j]
                .iter()
                .zip(&cols[prev])
                .map(|(a, b)| *a * *b)
                .sum();
            let prev_col = cols[prev].clone();
            for (c, p) in cols[j].iter_mut().zip(prev_col) {
                *c -= dot * p;
            }
        }
        let norm: T = cols[j].iter().map(|x| *x * *x).sum::<T>().sqrt();
        if norm < T::of(1e-12) {
            return None;
        }
        for c in cols[j].iter_mut() {
            *c /= norm;
        }
    }
    Some(Matrix::from_fn(d, k, |i, j| cols[j][i]))
}

/// Initialize a projection bank from the correlation-difference matrix
/// Delta C = corr(q) - corr(p): eigenvectors of the m k largest-|eigenvalue|
/// directions, chunked into m rank-k blocks, weighted by |eigenvalue| mass.
/// When the correlations already agree the bank falls back to random
/// orthonormal directions with uniform weights.
pub fn init_projections<T: Real>(
    q: &ParticleSet<T>,
    p_samples: &ParticleSet<T>,
    m: usize,
    k: usize,
    rng: &mut Rng,
) -> Result<ProjectionBank<T>> {
    if q.dim() != p_samples.dim() {
        return Err(Error::Dimension {
            context: "init_projections",
            expected: q.dim(),
            got: p_samples.dim(),
        });
    }
    let d = q.dim();
    if m == 0 || k == 0 || m * k > d {
        return Err(Error::contract("init_projections requires 1 <= m*k <= d"));
    }
    let cq = correlation_matrix(q)?;
    let cp = correlation_matrix(p_samples)?;
    let delta = cq.add_scaled(&cp, -T::one());
    if delta.frobenius_norm() < T::of(DEGENERATE_DELTA) {
        return ProjectionBank::random(d, m, k, rng);
    }

    let (vals, vecs) = symmetric_eigen(&delta)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .abs()
            .partial_cmp(&vals[a].abs())
            .expect("finite eigenvalues")
    });

    let mut matrices = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for block in 0..m {
        let cols: Vec<usize> = (0..k).map(|j| order[block * k + j]).collect();
        let a = Matrix::from_fn(d, k, |i, j| vecs[(i, cols[j])]);
        let mass: T = cols.iter().map(|&c| vals[c].abs()).sum();
        matrices.push(a);
        weights.push(mass);
    }
    let total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        return ProjectionBank::random(d, m, k, rng);
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    // Exact renormalization against round-off.
    let sum: T = weights.iter().copied().sum();
    if let Some(last) = weights.last_mut() {
        *last += T::one() - sum;
    }
    ProjectionBank::new(matrices, weights)
}

/// Monte Carlo objective of one projection: (1/B) sum_b |A^T (x_b - y_b)|^2
/// over index-paired samples.
fn projected_objective<T: Real>(a: &Matrix<T>, q: &ParticleSet<T>, p: &ParticleSet<T>) -> T {
    let pairs = q.len().max(p.len());
    let mut acc = T::zero();
    for b in 0..pairs {
        let x = q.particle(b % q.len());
        let y = p.particle(b % p.len());
        for col in 0..a.cols() {
            let mut dot = T::zero();
            for i in 0..a.rows() {
                dot += a[(i, col)] * (x[i] - y[i]);
            }
            acc += dot * dot;
        }
    }
    acc / T::of(pairs as f64)
}

/// Gradient of the objective: (2/B) sum_b delta_b (delta_b^T A).
fn projected_objective_grad<T: Real>(
    a: &Matrix<T>,
    q: &ParticleSet<T>,
    p: &ParticleSet<T>,
) -> Matrix<T> {
    let (d, k) = (a.rows(), a.cols());
    let pairs = q.len().max(p.len());
    let mut grad: Matrix<T> = Matrix::zeros(d, k);
    let mut delta = vec![T::zero(); d];
    for b in 0..pairs {
        let x = q.particle(b % q.len());
        let y = p.particle(b % p.len());
        for i in 0..d {
            delta[i] = x[i] - y[i];
        }
        for col in 0..k {
            let mut dot = T::zero();
            for i in 0..d {
                dot += a[(i, col)] * delta[i];
            }
            for i in 0..d {
                grad[(i, col)] += delta[i] * dot;
            }
        }
    }
    let scale = T::of(2.0) / T::of(pairs as f64);
    Matrix::from_fn(d, k, |i, j| grad[(i, j)] * scale)
}

/// Gradient-ascent refinement of each projection toward maximal projected
/// difference between q and p samples. Columns are re-orthonormalized after
/// every step; steps that decrease the objective are rejected and the
/// learning rate halved. Weights are refreshed proportional to the final
/// per-projection objective (kept unchanged when every objective vanishes).
pub fn optimize_projections<T: Real>(
    bank: &ProjectionBank<T>,
    q: &ParticleSet<T>,
    p_samples: &ParticleSet<T>,
    steps: usize,
    lr: T,
) -> Result<ProjectionBank<T>> {
    if bank.dim() != q.dim() || q.dim() != p_samples.dim() {
        return Err(Error::Dimension {
            context: "optimize_projections",
            expected: bank.dim(),
            got: q.dim().min(p_samples.dim()),
        });
    }
    let tol = T::of(OBJECTIVE_TOL);
    let mut matrices = Vec::with_capacity(bank.len());
    let mut objectives = Vec::with_capacity(bank.len());
    for idx in 0..bank.len() {
        let mut a = bank.matrix(idx).clone();
        let mut best = projected_objective(&a, q, p_samples);
        let mut rate = lr;
        for _ in 0..steps {
            let grad = projected_objective_grad(&a, q, p_samples);
            let candidate = a.add_scaled(&grad, rate);
            let Some(candidate) = orthonormalize(&candidate) else {
                rate = rate / T::of(2.0);
                continue;
            };
            let value = projected_objective(&candidate, q, p_samples);
            if value + tol >= best {
                a = candidate;
                best = value;
            } else {
                rate = rate / T::of(2.0);
            }
        }
        matrices.push(a);
        objectives.push(best);
    }

    let total: T = objectives.iter().copied().sum();
    let weights = if total > T::of(1e-12) {
        let mut w: Vec<T> = objectives.iter().map(|o| *o / total).collect();
        let sum: T = w.iter().copied().sum();
        if let Some(last) = w.last_mut() {
            *last += T::one() - sum;
        }
        w
    } else {
        bank.weights().to_vec()
    };
    ProjectionBank::new(matrices, weights)
}

/// Diagnostic penalty on a velocity field:
/// mean_i sum_k w_k || A_k^T (v_i - v_bar) ||^2.
pub fn corr_penalty<T: Real>(bank: &ProjectionBank<T>, velocities: &Matrix<T>) -> T {
    let n = velocities.rows();
    let d = velocities.cols();
    assert_eq!(d, bank.dim(), "velocity dimension mismatch");
    let mean: Vec<T> = (0..d)
        .map(|j| {
            (0..n).map(|i| velocities[(i, j)]).sum::<T>() / T::of(n as f64)
        })
        .collect();
    let mut acc = T::zero();
    for i in 0..n {
        let centered: Vec<T> = (0..d).map(|j| velocities[(i, j)] - mean[j]).collect();
        for (a, w) in bank.matrices.iter().zip(&bank.weights) {
            for col in 0..a.cols() {
                let mut dot = T::zero();
                for r in 0..d {
                    dot += a[(r, col)] * centered[r];
                }
                acc += *w * dot * dot;
            }
        }
    }
    acc / T::of(n as f64)
}

/// Analytic gradient of [`corr_penalty`] with respect to the velocities:
/// row i = (2/n) sum_k w_k A_k A_k^T (v_i - v_bar).
pub fn corr_penalty_grad<T: Real>(bank: &ProjectionBank<T>, velocities: &Matrix<T>) -> Matrix<T> {
    let n = velocities.rows();
    let d = velocities.cols();
    let mean: Vec<T> = (0..d)
        .map(|j| {
            (0..n).map(|i| velocities[(i, j)]).sum::<T>() / T::of(n as f64)
        })
        .collect();
    let scale = T::of(2.0) / T::of(n as f64);
    let mut out = Matrix::zeros(n, d);
    for i in 0..n {
        let centered: Vec<T> = (0..d).map(|j| velocities[(i, j)] - mean[j]).collect();
        let pushed = apply_weighted_projectors(bank, &centered);
        for j in 0..d {
            out[(i, j)] = scale * pushed[j];
        }
    }
    out
}

/// sum_k w_k A_k A_k^T v
fn apply_weighted_projectors<T: Real>(bank: &ProjectionBank<T>, v: &[T]) -> Vec<T> {
    let d = v.len();
    let mut out = vec![T::zero(); d];
    for (a, w) in bank.matrices.iter().zip(&bank.weights) {
        for col in 0..a.cols() {
            let mut dot = T::zero();
            for r in 0..d {
                dot += a[(r, col)] * v[r];
            }
            let scaled = *w * dot;
            for r in 0..d {
                out[r] += scaled * a[(r, col)];
            }
        }
    }
    out
}

/// Closed-form regularization force: row i holds
/// -lambda sum_k w_k A_k A_k^T (x_i - x_bar).
/// The rows sum to zero because the deviations are mean-centered.
pub fn corr_reg_force<T: Real>(
    bank: &ProjectionBank<T>,
    x: &ParticleSet<T>,
    lambda: T,
) -> Matrix<T> {
    let n = x.len();
    let d = x.dim();
    assert_eq!(d, bank.dim(), "particle dimension mismatch");
    let mut out = Matrix::zeros(n, d);
    if lambda == T::zero() {
        return out;
    }
    let mean = x.mean();
    for i in 0..n {
        let centered: Vec<T> = x
            .particle(i)
            .iter()
            .zip(&mean)
            .map(|(a, b)| *a - *b)
            .collect();
        let pushed = apply_weighted_projectors(bank, &centered);
        for j in 0..d {
            out[(i, j)] = -lambda * pushed[j];
        }
    }
    out
}
