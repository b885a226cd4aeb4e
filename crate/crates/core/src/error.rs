use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("duplicate or empty column name `{0}`")]
    BadColumnName(String),

    #[error("non-numeric feature column `{column}` (row {row}: `{value}`)")]
    NonNumericFeature {
        column: String,
        row: usize,
        value: String,
    },

    #[error("invalid value in feature column `{column}` at row {row}: `{value}`")]
    NonFiniteFeature {
        column: String,
        row: usize,
        value: String,
    },

    #[error("invalid target value at row {row}: `{value}`")]
    InvalidTarget { row: usize, value: String },

    #[error("dataset needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("dataset has no feature columns")]
    NoFeatures,

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("feature `{0}` is constant on the grid rows")]
    ConstantFeature(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("curves are not on a shared grid")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no model finished within the search budget")]
    NoModels,

    #[error("model pool archive: {0}")]
    Archive(String),

    #[error("config: {0}")]
    Config(String),

    #[error("dataset `{name}`: {source}")]
    InDataset {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn in_dataset(self, name: &str) -> Self {
        Error::InDataset {
            name: name.to_string(),
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnknownFeature(_) => ErrorKind::Config,
            Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::BadColumnName(_)
            | Error::NonNumericFeature { .. }
            | Error::NonFiniteFeature { .. }
            | Error::InvalidTarget { .. }
            | Error::TooFewRows(_)
            | Error::NoFeatures
            | Error::DegenerateSplit(_)
            | Error::ConstantFeature(_) => ErrorKind::Data,
            Error::InDataset { source, .. } => source.kind(),
            // Reading inputs is a data problem; everything else that touches
            // the filesystem happens while writing outputs.
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                ErrorKind::Data
            }
            Error::Io { .. }
            | Error::LengthMismatch { .. }
            | Error::GridMismatch
            | Error::InvalidArgument(_)
            | Error::NoModels
            | Error::Archive(_) => ErrorKind::Runtime,
        }
    }
}
