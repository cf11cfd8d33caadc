use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FoliageError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FoliageError {
    #[error(transparent)]
    Core(#[from] foliage_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output directory {path} is not writable: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl FoliageError {
    pub(crate) fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> FoliageError {
        let path = path.into();
        move |source| FoliageError::File { path, source }
    }
}
