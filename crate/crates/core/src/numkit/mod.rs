//! Shared numerical primitives: stable pairwise distances, RBF kernels with
//! adaptive bandwidth, correlation matrices, a symmetric Jacobi eigensolver,
//! Cholesky factorization and sorting-based 1D optimal transport.

mod eigen;
mod kernel;
mod matrix;
mod stats;
mod transport;

pub use eigen::{cholesky, cholesky_solve, spd_inverse, symmetric_eigen};
pub use kernel::{median_bandwidth, pairwise_sq_dist, rbf_kernel_grad, KernelGradients};
pub use matrix::{Matrix, ParticleSet};
pub use stats::{correlation_from_covariance, correlation_matrix, covariance_matrix};
pub use transport::wasserstein1_1d;
