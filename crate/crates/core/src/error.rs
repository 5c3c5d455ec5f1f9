use std::path::PathBuf;

use crate::params::ParamError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),

    #[error("invalid parameters at {axis} = {value}: {source}")]
    SweepPoint {
        axis: &'static str,
        value: String,
        #[source]
        source: ParamError,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("switching period {index} out of range (M = {periods})")]
    PeriodOutOfRange { index: usize, periods: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    IndefiniteCovariance { min_eigenvalue: f64 },

    #[error("config {path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
