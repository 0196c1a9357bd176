//! Symmetric eigendecomposition (cyclic Jacobi) and Cholesky factorization.
//!
//! All paper workloads stay at d <= 200, where plain Jacobi sweeps are
//! accurate and dependency-free.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::matrix::Matrix;

/// Tolerance on the off-diagonal Frobenius mass, relative to the input norm.
const JACOBI_TOL: f64 = 1e-11;
const MAX_SWEEPS: usize = 100;
/// Symmetry tolerance on input matrices.
const SYMMETRY_TOL: f64 = 1e-9;

/// Eigendecomposition of a symmetric matrix. Returns eigenvalues in
/// descending order and the matrix whose columns are the matching
/// orthonormal eigenvectors.
pub fn symmetric_eigen<T: Real>(m: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Dimension {
            context: "symmetric_eigen",
            expected: n,
            got: m.cols(),
        });
    }
    let scale = m.max_abs().max(T::one());
    if m.asymmetry() > T::of(SYMMETRY_TOL) * scale {
        return Err(Error::contract("symmetric_eigen requires a symmetric matrix"));
    }

    let mut a = m.clone();
    // Symmetrize exactly so rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)]) / T::of(2.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let frob = a.frobenius_norm().max(T::of(1e-300));
    let tol = T::of(JACOBI_TOL) * frob;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..(n.max(1) - 1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // Apply the rotation on rows/columns p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .expect("finite eigenvalues")
    });
    let values: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |row, col| v[(row, order[col])]);
    Ok((values, vectors))
}

/// Lower-triangular Cholesky factor L with m = L L^T. Fails if the matrix is
/// not positive definite.
pub fn cholesky<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Dimension {
            context: "cholesky",
            expected: n,
            got: m.cols(),
        });
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(Error::contract(format!(
                        "cholesky: matrix not positive definite (pivot {i})"
                    )));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve (L L^T) x = b given the lower Cholesky factor L.
pub fn cholesky_solve<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

/// Inverse of an SPD matrix via its Cholesky factor.
pub fn spd_inverse<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.rows();
    let l = cholesky(m)?;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
        e[j] = T::zero();
    }
    // Symmetrize against round-off.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (inv[(i, j)] + inv[(j, i)]) / T::of(2.0);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn identity_eigenvalues_are_ones() {
        let m = Matrix::<f64>::identity(4);
        let (vals, _) = symmetric_eigen(&m).unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_hand_decomposition() {
        let m = Matrix::from_rows(vec![vec![0.0f64, 0.9], vec![0.9, 0.0]]);
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!((vals[0] - 0.9).abs() < 1e-12);
        assert!((vals[1] + 0.9).abs() < 1e-12);
        // Top eigenvector proportional to (1, 1)/sqrt(2).
        let top = vecs.col(0);
        let s = 1.0 / 2.0f64.sqrt();
        let aligned = (top[0].abs() - s).abs() < 1e-10 && (top[1].abs() - s).abs() < 1e-10;
        assert!(aligned, "top eigenvector {top:?}");
        assert!(top[0] * top[1] > 0.0);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = Rng::from_seed(5);
        let n = 20;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.normal();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        // || m - V diag(vals) V^T ||_F < 1e-8 ||m||_F
        let mut recon = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += vecs[(i, k)] * vals[k] * vecs[(j, k)];
                }
                recon[(i, j)] = acc;
            }
        }
        let err = recon.add_scaled(&m, -1.0).frobenius_norm();
        assert!(err < 1e-8 * m.frobenius_norm(), "reconstruction error {err}");

        // Orthonormality of eigenvectors to 1e-10.
        let vtv = vecs.transpose().matmul(&vecs);
        let dev = vtv.add_scaled(&Matrix::identity(n), -1.0).max_abs();
        assert!(dev < 1e-10, "orthonormality deviation {dev}");

        // Eigenvalue sum equals trace to relative 1e-10.
        let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() <= 1e-10 * trace.abs().max(1.0));
    }

    #[test]
    fn non_symmetric_is_rejected() {
        let m = Matrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(symmetric_eigen(&m).is_err());
    }

    #[test]
    fn cholesky_round_trip() {
        let m = Matrix::from_rows(vec![
            vec![4.0f64, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ]);
        let l = cholesky(&m).unwrap();
        let recon = l.matmul(&l.transpose());
        assert!(recon.add_scaled(&m, -1.0).max_abs() < 1e-12);

        let b = vec![1.0, -2.0, 0.5];
        let x = cholesky_solve(&l, &b);
        let back = m.matvec(&x);
        for (u, w) in back.iter().zip(&b) {
            assert!((u - w).abs() < 1e-10);
        }

        let inv = spd_inverse(&m).unwrap();
        let prod = m.matmul(&inv);
        assert!(prod.add_scaled(&Matrix::identity(3), -1.0).max_abs() < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(cholesky(&m).is_err());
    }
}
