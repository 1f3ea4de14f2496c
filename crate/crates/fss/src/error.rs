use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FssError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FssError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `line` is 1-based.
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{0}")]
    Schema(String),

    #[error("empty {0}")]
    EmptyDataset(&'static str),

    #[error("cannot split dataset: {0}")]
    Split(String),

    #[error("{folds} folds over {instances} instances")]
    Folds { folds: usize, instances: usize },

    #[error("exhaustive search over {attributes} attributes exceeds the limit of {limit}")]
    TooManyAttributes { attributes: usize, limit: usize },
}
