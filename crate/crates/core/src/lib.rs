//! Duality-free stochastic composition optimization.
//!
//! Minimizes objectives of the form
//!
//! ```text
//! P(x) = (1/n) Σ_i F_i( (1/m) Σ_j G_j(x) ) + (λ/2)‖x‖²
//! ```
//!
//! with three dual-free solvers (exact-inner SCDF, SVRG-estimated SCDF and
//! SAGA-estimated SCDF), a set of baselines, built-in benchmark problems,
//! step-size calculators derived from the convergence bounds, and a seeded,
//! query-metered experiment harness.
//!
//! Every oracle call made by a solver goes through a [`QueryCounter`], so
//! traces can be compared on the number of inner-function queries consumed.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod gradcheck;
pub mod oracle;
pub mod par;
pub mod problems;
pub mod rng;
pub mod theory;
pub mod trace;

pub use error::{Error, Result};
pub use oracle::{CompositionProblem, Matrix, QueryCounter, Vector};
pub use trace::{Trace, TraceRow};
