//! Dense row-major matrix and the particle-set belief representation.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense matrix with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows * cols > 0, "matrix must be non-empty");
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        assert!(!rows.is_empty(), "matrix must have at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "matrix must have at least one column");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in &rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Column `j` as an owned vector.
    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| *a * *b)
                    .sum::<T>()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|x| *x * *x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Maximum absolute asymmetry |a_ij - a_ji| over all pairs.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Elementwise `self + scale * other`.
    pub fn add_scaled(&self, other: &Matrix<T>, scale: T) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a + scale * *b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// A weighted-free particle cloud: `n` particles in `d` dimensions plus the
/// belief timestep it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet<T> {
    positions: Matrix<T>,
    timestep: u64,
}

impl<T: Real> ParticleSet<T> {
    /// Wrap a matrix of particle positions. Every entry must be finite.
    pub fn new(positions: Matrix<T>) -> Result<Self> {
        if !positions.is_finite() {
            return Err(Error::NonFinite {
                phase: "particle-set construction",
                detail: "positions contain non-finite entries".into(),
            });
        }
        Ok(ParticleSet {
            positions,
            timestep: 0,
        })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.positions.cols()
    }

    #[inline]
    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    pub fn set_timestep(&mut self, t: u64) {
        self.timestep = t;
    }

    #[inline]
    pub fn particle(&self, i: usize) -> &[T] {
        self.positions.row(i)
    }

    pub fn positions(&self) -> &Matrix<T> {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut Matrix<T> {
        &mut self.positions
    }

    /// Mean position across particles.
    pub fn mean(&self) -> Vec<T> {
        let n = T::of(self.len() as f64);
        let mut out = vec![T::zero(); self.dim()];
        for i in 0..self.len() {
            for (o, x) in out.iter_mut().zip(self.particle(i)) {
                *o += *x;
            }
        }
        for o in out.iter_mut() {
            *o /= n;
        }
        out
    }

    /// Project every particle onto a direction vector.
    pub fn project(&self, direction: &[T]) -> Vec<T> {
        assert_eq!(direction.len(), self.dim());
        (0..self.len())
            .map(|i| {
                self.particle(i)
                    .iter()
                    .zip(direction)
                    .map(|(a, b)| *a * *b)
                    .sum()
            })
            .collect()
    }

    /// Error unless every coordinate is finite; `phase` names the caller.
    pub fn ensure_finite(&self, phase: &'static str) -> Result<()> {
        for i in 0..self.len() {
            if let Some(j) = self.particle(i).iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    phase,
                    detail: format!("particle {i}, dimension {j}"),
                });
            }
        }
        Ok(())
    }
}
