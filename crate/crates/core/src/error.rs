//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Classification used by callers (the CLI maps these to exit codes):
/// `Config` marks invalid inputs or violated preconditions, `Numeric`
/// marks failures that occur while computing with valid inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("covariance is not positive semidefinite: pivot {pivot} at index {index} (tolerance {tolerance})")]
    NotPsd {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("families have mismatched index sets or dimensions ({context})")]
    IndexMismatch { context: &'static str },

    #[error("sample {index} of the Monte Carlo functional is not finite ({value})")]
    NonFiniteSample { index: usize, value: f64 },

    #[error("matrix contains non-finite entries")]
    NonFiniteEntries,

    #[error("norm {norm} is not supported for {operation}")]
    UnsupportedNorm {
        norm: String,
        operation: &'static str,
    },

    #[error("exact computation for {operation} requires dimension <= {max}, got {got}")]
    DimensionTooLargeForExact {
        operation: &'static str,
        max: usize,
        got: usize,
    },

    #[error("index point {index} has Euclidean norm {norm} > 1")]
    PointOutsideBall { index: usize, norm: f64 },

    #[error("index point {index} has Euclidean norm {norm}, expected 1 (tolerance {tolerance})")]
    PointNotOnSphere {
        index: usize,
        norm: f64,
        tolerance: f64,
    },

    #[error("function {index} has Lipschitz constant {constant}, expected <= 1")]
    LipschitzViolation { index: usize, constant: f64 },

    #[error("norm domination |||x||| <= ||x||_2 fails at a sampled unit vector (value {value})")]
    NormDominationViolation { value: f64 },

    #[error("no gradient is available for the supplied function")]
    GradientUnavailable,

    #[error("degenerate regime: epsilon*mu/L = {t} yields section dimension {n} < 1")]
    DegenerateRegime { t: f64, n: i64 },

    #[error("invalid parameter {field}: {message}")]
    InvalidValue { field: &'static str, message: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotPsd { .. }
            | Error::NonFiniteSample { .. }
            | Error::NonFiniteEntries
            | Error::GradientUnavailable => ErrorClass::Numeric,
            _ => ErrorClass::Config,
        }
    }
}
