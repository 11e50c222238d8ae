use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("no mass for tuple {0:?}")]
    NoMass(String),

    #[error("tuple length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid tuple {tuple:?} for length {length}")]
    InvalidTuple { tuple: String, length: usize },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate date {0}")]
    DuplicateDate(chrono::NaiveDate),

    #[error("index {index} out of range for {n_states}-state space of {size} machines")]
    IndexOutOfRange {
        index: u64,
        n_states: usize,
        size: u64,
    },

    #[error("budget guard: {0}")]
    BudgetGuard(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("check failed: {0}")]
    Check(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
