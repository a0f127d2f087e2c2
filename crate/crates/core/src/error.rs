use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model or distribution parameters violate their constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A delimited input row could not be parsed.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Input data violates a structural invariant (duplicate dates,
    /// non-positive prices, degenerate series, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Two price series could not be aligned onto a common calendar.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// The likelihood filter produced a non-finite value; the optimizer
    /// treats the parameter point as infeasible.
    #[error("filter error: {0}")]
    Filter(String),

    /// An estimator failed to converge after all restarts.
    #[error("fit error: {0}")]
    Fit(String),

    /// A root-finder or quadrature routine failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A run configuration is unusable.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
