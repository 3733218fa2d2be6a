use std::path::PathBuf;

use thiserror::Error;

use crate::ClusterId;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The engine detected a broken internal invariant (asymmetric maps,
    /// messages to deleted clusters, ...).
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown cluster {0}")]
    UnknownCluster(ClusterId),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn consistency(msg: impl Into<String>) -> Self {
        Error::Consistency(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
