use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    Singular { pivot: usize, value: f64 },

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| exceeds tolerance")]
    NotSymmetric { row: usize, col: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid size: {0}")]
    Size(String),

    #[error("compressive regime requires n < N, got n = {n}, N = {n_signal}")]
    NotCompressive { n: usize, n_signal: usize },

    #[error("signal length {n_signal} is not divisible by 2^{levels}")]
    Decomposition { n_signal: usize, levels: usize },

    #[error("unsupported Daubechies filter length {0} (supported: 2, 4, 6, 8, 10)")]
    UnsupportedWavelet(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("empty sample")]
    EmptySample,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
