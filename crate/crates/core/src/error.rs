use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("bad timestamp {value:?} (row {row}): {reason}")]
    BadTimestamp {
        row: usize,
        value: String,
        reason: String,
    },
    #[error("bad value {value:?} in column `{column}` (row {row})")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("file contains no data: {0}")]
    EmptyFile(PathBuf),
    #[error("invalid schema: {0}")]
    BadSchema(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no rows left: {0}")]
    EmptyResult(String),
    #[error("every feature was removed by the preprocessing rules")]
    NoFeaturesLeft,
    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("bad model artifact: {0}")]
    BadArtifact(String),
    #[error("bad generator spec: {0}")]
    BadSpec(String),
    #[error("bad fault window: {0}")]
    BadWindow(String),
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
