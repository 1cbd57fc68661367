use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A non-finite value appeared at the given (1-based) iteration.
    #[error("divergence at iteration {iteration}: {what} is not finite")]
    Divergence { iteration: u64, what: &'static str },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("regressor is not persistently exciting (normalized excitation level {0})")]
    NotPersistentlyExciting(f64),

    #[error("step called with hyperparameters for {found}, expected {expected}")]
    WrongAlgorithm {
        expected: &'static str,
        found: &'static str,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("algorithm `{algorithm}` diverged at iteration {iteration}")]
    RunDivergence { algorithm: String, iteration: u64 },

    #[error("quantity `{quantity}` is unavailable for algorithm `{algorithm}`")]
    UnavailableQuantity { quantity: String, algorithm: String },

    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for divergence errors, at either the step or the run level.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::RunDivergence { .. })
    }
}
