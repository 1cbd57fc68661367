//! Online parameter identification for linear-in-parameter regressions.
//!
//! Estimators: normalized gradient descent, the high-order tuners `hb` and
//! `na`, and classical heavy-ball and Nesterov baselines. The analysis
//! module estimates persistent excitation levels, evaluates certified
//! convergence rates and checks Lyapunov envelopes along recorded traces.

// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod regress;
pub mod tuners;

pub use error::{Error, Result};
pub use regress::{RegressorSample, RegressorSource};
pub use tuners::{step, Algorithm, HyperParams, TunerState, ValidationMode};
