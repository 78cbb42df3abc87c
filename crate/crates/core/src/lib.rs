//! Shock response spectrum toolkit.
//!
//! * [`srs`]: the forward SRS operator (recursive filter bank and analytical oracle);
//! * [`synth`]: reproducible synthetic shock generation;
//! * [`sds`]: sum-of-decayed-sinusoids inverse solver with optional GA refinement;
//! * [`losses`]: reference implementations of the training-loss terms;
//! * [`metrics`]: RMSLE, per-frequency dB error, win rates and spectrum aggregation;
//! * [`dataset`]: the on-disk shock dataset format, normalization and conditioning encoding.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod dataset;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod sds;
pub mod srs;
pub mod synth;

mod par;

pub use error::{Error, Result};

/// Floor applied to spectrum values before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;
pub use srs::{FrequencyGrid, Signal, Spectrum};
