use thiserror::Error;

use crate::metrics::BoundId;

/// Errors raised by geometry, problem, inner-solver and outer-loop routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("component {index} is {value}, must be strictly positive")]
    NonPositiveComponent { index: usize, value: f64 },

    #[error("multiplier diverged: component {index} has mirror coordinate {exponent}")]
    DivergedMultiplier { index: usize, exponent: f64 },

    #[error("degenerate probe: the two probe points coincide")]
    DegenerateProbe,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("reference solution unavailable: KKT residual {residual:e}")]
    ReferenceUnavailable { residual: f64 },

    #[error("inner solver stopped after {iterations} iterations with residual {residual:e}")]
    InnerMaxIters { iterations: usize, residual: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("{bound} violated at k={k}: lhs {lhs:e} > rhs {rhs:e} + slack {slack:e}")]
    InvariantViolation {
        bound: BoundId,
        k: usize,
        lhs: f64,
        rhs: f64,
        slack: f64,
    },

    #[error("trace is missing field `{0}`")]
    MissingField(&'static str),

    #[error("rate fit needs at least 5 positive points, found {found}")]
    TooFewPoints { found: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
