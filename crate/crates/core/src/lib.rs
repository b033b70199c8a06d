//! Online convex optimization under arbitrarily delayed feedback.
//!
//! The crate is organized around the pieces of a delayed-feedback experiment:
//!
//! - [`delay_model`]: delay schedules, observed/missing bookkeeping and delay statistics.
//! - [`geometry`]: ball projections (Euclidean and Mahalanobis), PSD solves and
//!   Sherman-Morrison maintenance of inverses.
//! - [`learners`]: delayed FTRL, delayed ONS, clipped delayed VAW and delayed OMD.
//! - [`baselines`]: DOGD, DOGD-SC, SDMD-RSC and the BOLD pooling reduction.
//! - [`environments`]: loss families, synthetic/non-stationary/dataset streams.
//! - [`harness`]: experiment runner, offline comparator, CSV output.

pub mod baselines;
pub mod delay_model;

pub mod environments;
pub mod error;
pub mod geometry;

pub mod harness;
pub mod learners;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};

/// Dense real vector used for points, gradients and features.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
