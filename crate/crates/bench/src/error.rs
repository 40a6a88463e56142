use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{method} estimate diverged at t = {t} (|x| = {magnitude:e})")]
    Diverged {
        method: String,
        t: usize,
        magnitude: f64,
    },

    #[error(transparent)]
    Core(#[from] drmhe::Error),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
