use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Invalid settings; the CLI maps this to exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cosparse::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl BenchError {
    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
