use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: expected {expected}, got {actual}")]
    InvalidDimension { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    /// A proportion formula hit a zero denominator. `index` is 1-based.
    #[error("zero denominator while computing {what} at index {index}")]
    Division { what: &'static str, index: usize },

    /// Cholesky factorization failed for the covariance feeding a GLS solve.
    #[error("singular covariance: {estimator} is not positive definite")]
    SingularMatrix { estimator: String },

    #[error("insufficient data: need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    /// Column with zero variance where a correlation is needed. `column` is 1-based.
    #[error("zero variance in column {column}")]
    ZeroVariance { column: usize },

    #[error("graphical lasso did not converge after {iterations} sweeps")]
    Convergence { iterations: usize },

    #[error("degenerate series: sum of squared lagged values is zero")]
    DegenerateSeries,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate curve: minimum and maximum cumulative volume coincide")]
    DegenerateCurve,

    #[error("invalid price {price}: {reason}")]
    InvalidPrice { price: f64, reason: &'static str },

    #[error("no equilibrium: supply and demand curves do not cross in [-500, 3000]")]
    NoEquilibrium,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(expected: impl ToString, actual: impl ToString) -> Self {
        Error::InvalidDimension {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

/// Rejects slices containing NaN or infinities.
pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
