use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape error: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index {index} out of range 0..{len}")]
    Index { index: usize, len: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("fold error: {folds} folds requested for {samples} samples")]
    Fold { folds: usize, samples: usize },
    #[error("training failed for every model: {0}")]
    AllModelsFailed(String),
    #[error("safety abort: measured force {force:.3} N exceeds limit {limit:.3} N")]
    Abort { force: f64, limit: f64 },
    #[error("timeout: grip did not settle within {ticks} ticks")]
    Timeout { ticks: usize },
    #[error("segmentation error: {0}")]
    Segmentation(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
