use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or arguments.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A malformed input file, with the location of the offending cell.
    #[error("{}:{line}{}: {message}", path.display(), column.map(|c| format!(":{c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: u64,
        column: Option<usize>,
        message: String,
    },

    /// Well-formed input that violates a data invariant.
    #[error("invalid data: {0}")]
    Data(String),

    #[error("unknown state label {0:?}")]
    UnknownState(String),

    #[error("window exceeds series (window {window}, length {length})")]
    WindowExceedsSeries { window: usize, length: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("no candidates")]
    NoCandidates,

    /// Every fallback was tried at the given end time without producing a candidate.
    #[error("generation stalled at t={t_c}")]
    Stall { t_c: usize },

    #[error("sequence {ordinal}: {source}")]
    Generation {
        ordinal: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// The end time at which generation stalled, if this is a stall.
    pub fn stall_time(&self) -> Option<usize> {
        match self {
            Error::Stall { t_c } => Some(*t_c),
            Error::Generation { source, .. } => source.stall_time(),
            _ => None,
        }
    }
}
