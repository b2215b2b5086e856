//! Hypothesis checkers and empirical verifiers for the second-order Riccati
//! equation
//!
//! ```text
//! y'' + 3a·y·y' + b·y' + a²·y³ + c·y² + d·y + e = 0
//! ```
//!
//! and for the three-dimensional linear systems that reduce to it.
//!
//! The layers build on each other: [`expr`] holds coefficient functions,
//! [`ode`] integrates, [`riccati`] and [`transform`] provide the scalar
//! functionals and the exact reductions, [`criteria`] turns theorem
//! hypotheses into grid evidence and certificates, and [`harness`] checks
//! every certified conclusion by direct integration.

// `!(x <= y)` is used deliberately so that NaN counts as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod error;
pub mod expr;
pub mod grid;
pub mod harness;
pub mod ode;
pub mod par;
pub mod quad;
pub mod riccati;
pub mod transform;

pub use error::{Error, Result};
pub use expr::{Expr, ExprError};
pub use ode::{integrate, OdeError, Options, Status, Trajectory};
pub use par::Execution;
