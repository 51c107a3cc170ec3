use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the radical-pair toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hilbert dimension {dim} exceeds the configured cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("cannot read model file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation failed ({invariant}): {detail}")]
    Validation { invariant: String, detail: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{method} did not converge (residual {residual:e})")]
    NonConvergence { method: String, residual: f64 },

    #[error("optimal estimator undefined: quantum Fisher information is {qfi:e}")]
    UndefinedEstimator { qfi: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("orientation theta = {theta_deg} deg, phi = {phi_deg} deg failed: {source}")]
    AtOrientation {
        theta_deg: f64,
        phi_deg: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn validation(invariant: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant: invariant.into(),
            detail: detail.into(),
        }
    }
}
