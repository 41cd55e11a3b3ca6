//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or arguments caught before any numerical work.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data (e.g. a LIBSVM line that does not parse).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input data violating a documented contract (labels, indices, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A caller handed a matrix or vector violating an operation contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Numerical breakdown with diagnostics attached.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An eigensolver ran out of iterations; carries the best estimate.
    #[error("eigensolver did not converge (best estimate {best_estimate}, residual {residual})")]
    EigNonConvergence { best_estimate: f64, residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
