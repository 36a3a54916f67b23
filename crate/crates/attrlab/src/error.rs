use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AppError>;

/// Process exit codes.
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MODEL: i32 = 3;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] attrlab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: duplicate id {id:?} on line {line}", path.display())]
    DuplicateId { path: PathBuf, id: String, line: usize },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn config(message: impl Into<String>) -> Self {
        AppError::Config(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) if e.is_model_error() => EXIT_MODEL,
            _ => EXIT_CONFIG,
        }
    }
}
