use thiserror::Error;

use crate::training::TrainHistory;

/// Errors raised anywhere in the simulation, training and forecasting stack.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid dimensions, parameters or model/config combinations.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller passed arguments that do not fit together (wrong wire, wrong length).
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data violates a precondition (constant column, too short, out of range).
    #[error("data error: {0}")]
    Data(String),

    /// Divergence or a non-finite update; carries the history up to that point.
    #[error("training error: {message}")]
    Training {
        message: String,
        history: Option<Box<TrainHistory>>,
    },

    /// Weights file is unreadable, corrupted or from an unsupported schema version.
    #[error("weights error: {0}")]
    Weights(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
