use thiserror::Error;

use crate::expr::ExprError;
use crate::ode::OdeError;

/// Errors shared by the analysis layers (riccati, transform, criteria,
/// harness).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("degenerate: {what} vanishes at t = {t}")]
    Degenerate { what: String, t: f64 },
    #[error("precondition {condition} violated: {detail}")]
    Precondition { condition: String, detail: String },
    #[error("span mismatch: {0}")]
    SpanMismatch(String),
    #[error("unsupported theorem `{0}`")]
    UnsupportedTheorem(String),
    #[error("theorem {theorem} needs comparison solution `{name}`")]
    MissingComparison { theorem: String, name: String },
    #[error("admissible initial-condition region is empty: {0}")]
    EmptyRegion(String),
    #[error("inadmissible initial data: {0}")]
    Inadmissible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn precondition(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Precondition {
            condition: condition.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn degenerate(what: impl Into<String>, t: f64) -> Self {
        Error::Degenerate { what: what.into(), t }
    }
}
