use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An operator or type was used outside its documented preconditions.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The run configuration is invalid. `field` names the offending setting.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("fitness evaluation failed for individual {index}: {reason}")]
    Evaluation { index: usize, reason: String },

    /// A map or reduce task failed. `index` is the split or partition.
    #[error("phase `{phase}` failed on task {index}: {source}")]
    Phase {
        phase: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("generation {generation}: {source}")]
    Generation {
        generation: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Persist(#[from] PersistError),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_phase(self, phase: &'static str, index: usize) -> Self {
        Error::Phase {
            phase,
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_generation(self, generation: u64) -> Self {
        Error::Generation {
            generation,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping phase and generation context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Phase { source, .. } | Error::Generation { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Failures reading or writing run artifacts.
#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("refusing to write: {0}")]
    Invariant(String),
}

impl PersistError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.into(),
            source,
        }
    }
}
