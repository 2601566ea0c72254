use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode {mode} for a tensor of order {order} (modes are 1-based)")]
    InvalidMode { mode: usize, order: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid component range {lo}..={hi} for {cols} columns")]
    Range { lo: usize, hi: usize, cols: usize },

    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),

    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Pgm { path: PathBuf, msg: String },

    #[error("unsupported model version: {0:?}")]
    Version(String),

    #[error("model checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed model file: {0}")]
    Malformed(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
