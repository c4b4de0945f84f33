use std::io;

use thiserror::Error;

/// Errors produced by the sketch, protocol, simulator and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible sketches: {0}")]
    Incompatible(String),

    #[error("peer {peer} has not converged: its peer-count estimator is still zero")]
    NotConverged { peer: usize },

    #[error("too few rounds: {0}")]
    RoundsInsufficient(String),

    #[error("degenerate plan: {0}")]
    DegeneratePlan(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
