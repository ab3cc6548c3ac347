//! Power-transformer fault diagnosis from dissolved gas analysis.
//!
//! The pipeline computes 37 ratio features per sample, ranks them by
//! skewness, decomposes a 12-wide window of ranked features with single-level
//! EMD and classifies the resulting IMF coefficients with a two-level
//! gradient-boosted tree hierarchy (discharge vs. thermal, then the specific
//! fault). Rule-based Duval triangle, Rogers ratio and IEC ratio diagnosers
//! and an evaluation harness are included for comparison.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod boost;
pub mod emd;
pub mod error;
pub mod eval;
pub mod features;
pub mod hierarchy;
pub mod io;
pub mod pipeline;
pub mod ranking;
pub mod spline;

pub use error::{Error, Result};
pub use features::{FaultClass, GasSample, SuperClass};
