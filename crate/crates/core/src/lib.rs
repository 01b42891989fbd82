//! Functional linear regression with kernel regressors and ARH(1)-correlated
//! errors in `L²((a, b))`.
//!
//! The crate covers the full chain from simulation to prediction:
//!
//! - [`basis`]: the orthonormal sine basis and grid conversions;
//! - [`spectral`]: diagonal covariance/autocorrelation operators and regressors;
//! - [`arh`]: exact simulation of the ARH(1) error and the response;
//! - [`gls`]: the known-covariance GLS estimator built on tridiagonal precision blocks;
//! - [`plugin`]: the empirical pipeline for unknown covariance and one-step prediction;
//! - [`harness`]: Monte Carlo experiments, configuration and CSV reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arh;
pub mod basis;
pub mod error;
pub mod gls;
pub mod harness;
pub mod model;
pub mod parallel;
pub mod plugin;
pub mod spectral;

pub use error::{Error, Result};
