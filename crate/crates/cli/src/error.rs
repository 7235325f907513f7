use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("config has no [{0}] section")]
    MissingSection(&'static str),

    #[error("no seed given; set `seed` in the config or pass --seed")]
    MissingSeed,

    #[error("{path}, line {line}: {message}")]
    Records { path: PathBuf, line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] qdiff_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RunError>;

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RunError {
    let path = path.into();
    move |source| RunError::Io { path, source }
}
