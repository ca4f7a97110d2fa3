//! Implied unit-level weights of linear-regression estimators of causal
//! effects.
//!
//! Regression adjustment estimators of average treatment effects are
//! weighting estimators in disguise. This crate computes those weights for
//! pooled (URI) and per-group (MRI) regressions and their weighted and
//! doubly robust relatives, the Hájek estimates they reproduce, and the
//! design-stage diagnostics built on them: balance, dispersion, effective
//! sample size, extrapolation and sample influence. Closed forms are
//! checked against refits and a dense KKT solve of the balancing quadratic
//! program in [`qp_oracle`].

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod lsq;
pub mod numeric;
pub mod qp_oracle;
pub mod report;
pub mod simulation;
pub mod weights;

pub use error::{Error, ErrorClass, Result};
