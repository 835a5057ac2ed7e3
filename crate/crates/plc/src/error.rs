use std::path::PathBuf;

use plc_core::{DataError, PlcError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Parse { path: PathBuf, row: usize, column: usize, message: String },
    #[error("{} is empty", .0.display())]
    Empty(PathBuf),
    #[error("{features} feature rows but {labels} labels")]
    Alignment { features: usize, labels: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid TOML in {}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Plc(#[from] PlcError),
    #[error("no records to report")]
    NoRecords,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
