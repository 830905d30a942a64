use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: {0}")]
    Length(String),

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("label {label} out of range for {n_classes} classes (row index {index})")]
    LabelRange {
        index: usize,
        label: u64,
        n_classes: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate geometry at sample {sample}: {what} is zero")]
    Degenerate { sample: usize, what: &'static str },

    #[error("class {class} has no members")]
    EmptyClass { class: usize },

    #[error("subset carries no noise pattern (sum of Nc_j * rho_j is zero)")]
    NoNoisePattern,

    #[error("{0}")]
    Invalid(String),
}

/// Broad failure category, used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
