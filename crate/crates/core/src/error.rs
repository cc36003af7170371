//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side contract (e.g. ordering of CDF values) was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numeric routine failed to reach its accuracy target.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An optimizer did not converge; carries the best incumbent found.
    #[error("optimization failed: {message}")]
    Optim {
        message: String,
        best: Option<(Vec<f64>, f64)>,
    },

    /// A stochastic-approximation iterate left the search range.
    #[error("stochastic approximation diverged: {message}")]
    SaDiverged { message: String, tail: Vec<f64> },

    /// A matrix that must be invertible was singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A design matrix did not have full column rank.
    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    /// The requested operation is not supported by this model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A data file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn optim(msg: impl Into<String>) -> Self {
        Error::Optim {
            message: msg.into(),
            best: None,
        }
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
