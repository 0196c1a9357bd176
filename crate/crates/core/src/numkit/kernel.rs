//! Pairwise distances and the RBF kernel with adaptive bandwidth.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::matrix::{Matrix, ParticleSet};

/// Componentwise magnitude beyond which squared distances are accumulated in
/// scaled form to avoid overflow.
const OVERFLOW_GUARD: f64 = 1e5;

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    let mut max_abs = T::zero();
    for (x, y) in a.iter().zip(b) {
        max_abs = max_abs.max((*x - *y).abs());
    }
    if max_abs > T::of(OVERFLOW_GUARD) {
        // Scaled accumulation: ||d||^2 = m^2 * sum (d_j/m)^2 with m = max|d_j|.
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            let r = (*x - *y) / max_abs;
            acc += r * r;
        }
        max_abs * max_abs * acc
    } else {
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            let d = *x - *y;
            acc += d * d;
        }
        acc
    }
}

/// Matrix of squared Euclidean distances between two particle sets:
/// entry (i, j) = ||a_i - b_j||^2.
pub fn pairwise_sq_dist<T: Real>(a: &ParticleSet<T>, b: &ParticleSet<T>) -> Result<Matrix<T>> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            context: "pairwise_sq_dist",
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut out = Matrix::zeros(a.len(), b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[(i, j)] = sq_dist(a.particle(i), b.particle(j));
        }
    }
    Ok(out)
}

/// Adaptive kernel bandwidth: h0 * median(||x_i - x_j||) * sqrt(d) / 2 over
/// the off-diagonal pairs. If every particle coincides (median zero) the base
/// bandwidth h0 is returned so the kernel stays well defined.
pub fn median_bandwidth<T: Real>(x: &ParticleSet<T>, h0: T) -> Result<T> {
    if x.len() < 2 {
        return Err(Error::contract("median_bandwidth requires n >= 2"));
    }
    let mut dists = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            dists.push(sq_dist(x.particle(i), x.particle(j)).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        (dists[mid - 1] + dists[mid]) / T::of(2.0)
    };
    if median <= T::zero() {
        return Ok(h0);
    }
    let d = T::of(x.dim() as f64);
    Ok(h0 * median * d.sqrt() / T::of(2.0))
}

/// Per-pair kernel gradients: `get(i, j)` is the gradient of k(x_j, x_i)
/// with respect to x_j, i.e. (2/h) (x_i - x_j) k_ij.
#[derive(Debug, Clone)]
pub struct KernelGradients<T> {
    n: usize,
    d: usize,
    data: Vec<T>,
}

impl<T: Real> KernelGradients<T> {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[T] {
        let base = (i * self.n + j) * self.d;
        &self.data[base..base + self.d]
    }
}

/// RBF kernel matrix K_ij = exp(-||x_i - x_j||^2 / h) together with the
/// per-pair gradient block.
pub fn rbf_kernel_grad<T: Real>(
    x: &ParticleSet<T>,
    h: T,
) -> Result<(Matrix<T>, KernelGradients<T>)> {
    if h <= T::zero() {
        return Err(Error::contract("rbf_kernel_grad requires h > 0"));
    }
    let n = x.len();
    let d = x.dim();
    let sq = pairwise_sq_dist(x, x)?;
    let mut kernel = Matrix::zeros(n, n);
    for i in 0..n {
        kernel[(i, i)] = T::one();
        for j in (i + 1)..n {
            let v = (-sq[(i, j)] / h).exp();
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }
    let two_over_h = T::of(2.0) / h;
    let mut data = vec![T::zero(); n * n * d];
    for i in 0..n {
        let xi = x.particle(i);
        for j in 0..n {
            let k = kernel[(i, j)];
            let xj = x.particle(j);
            let base = (i * n + j) * d;
            for (idx, (a, b)) in xi.iter().zip(xj).enumerate() {
                data[base + idx] = two_over_h * (*a - *b) * k;
            }
        }
    }
    Ok((kernel, KernelGradients { n, d, data }))
}
