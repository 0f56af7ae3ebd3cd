//! Random Ferns classification of polarimetric SAR covariance images.
//!
//! The crate is `no_std` with `alloc`. Enable `parallel` (which implies
//! `std`) to spread per-pixel and per-fern work over a rayon pool; results
//! are identical with and without it.
//!
//! Modules, bottom-up:
//! - [`polsar`]: Hermitian covariance matrices, matrix logarithm, spans and
//!   the log-Euclidean distance.
//! - [`features`]: one- and two-point patch projections thresholded to bits.
//! - [`ferns`]: the fern ensemble, training and posterior computation.
//! - [`optimize`]: preselection/grouping and iterative structure search.
//! - [`eval`]: confusion matrices, accuracy metrics, entropy and calibration.
//! - [`synth`]: complex-Wishart scene generator for testing.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::needless_range_loop)]
extern crate alloc;

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod ferns;
pub mod optimize;
pub mod polsar;
pub mod synth;

pub use error::{Error, Result};
