//! Particle-based belief approximation.
//!
//! The crate implements a correlation-aware regularized SVGD belief update
//! with temporal-consistency forces, a bootstrap (SIR) particle filter
//! baseline, three simulated POMDP environments, a catalog of synthetic
//! multi-modal Gaussian mixtures, and the metric suite used to compare
//! belief approximations.
//!
//! All numerical code is generic over the scalar type via [`scalar::Real`]
//! (f32 or f64); the aliases below fix the f64 instantiation used by the
//! benchmark harness.

pub mod belief;
pub mod corrproj;
pub mod envs;
pub mod error;
pub mod metrics;
pub mod numkit;
pub mod rng;
pub mod scalar;
pub mod stein;
pub mod targets;
pub mod temporal;

pub use error::{Error, Result};
pub use scalar::Real;

/// f64 matrix.
pub type Matrix64 = numkit::Matrix<f64>;
/// f64 particle set.
pub type Particles64 = numkit::ParticleSet<f64>;
/// f64 Gaussian mixture.
pub type Gmm64 = targets::GmmSpec<f64>;
/// f64 projection bank.
pub type ProjectionBank64 = corrproj::ProjectionBank<f64>;
/// f64 temporal directions.
pub type TemporalDirections64 = temporal::TemporalDirections<f64>;
/// f64 filter configuration.
pub type EscortConfig64 = belief::EscortConfig<f64>;
/// f64 filter state.
pub type FilterState64 = belief::FilterState<f64>;
