use std::path::PathBuf;

use thiserror::Error;

/// Invalid configuration value. `field` names the offending setting.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("input is empty")]
    EmptyInput,
    #[error("token {token} at position {position} is outside the vocabulary (size {vocab_size})")]
    TokenOutOfRange {
        position: usize,
        token: u32,
        vocab_size: usize,
    },
    #[error("model file: {0}")]
    Format(String),
    #[error("n-gram table has no row for context `{0}`")]
    MissingRow(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("expansion pool is empty; beam state is inconsistent")]
    EmptyPool,
    #[error("expected {expected} score rows, got {got}")]
    RowCount { expected: usize, got: usize },
    #[error("score row has {got} entries, vocabulary has {expected}")]
    RowWidth { expected: usize, got: usize },
    #[error("beam of active width {width} exceeds step capacity {capacity}")]
    BeamExceedsCapacity { width: usize, capacity: usize },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Top-level error for the engines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit code for the CLI: 1 config, 2 I/O, 3 internal invariant.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Model(ModelError::TokenOutOfRange { .. }) => 1,
            Error::Model(ModelError::EmptyInput) => 1,
            Error::Model(_) | Error::Corpus { .. } | Error::Io { .. } | Error::Json { .. } => 2,
            Error::Csv(_) => 2,
            Error::Search(_) | Error::Invariant(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
