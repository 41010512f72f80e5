use thiserror::Error;

use crate::tables::TableId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MCS index {index} for {table}")]
    InvalidMcs { table: TableId, index: u8 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("combining shape mismatch: history holds {expected} RBs, attempt has {got}")]
    CombiningShape { expected: usize, got: usize },

    #[error("HARQ combining across different MCS or beta: {0}")]
    Combining(String),

    #[error("no SINR-BLER curve for {table} MCS {index}")]
    MissingCurve { table: TableId, index: u8 },

    #[error("transport block of {tbs} bits exceeds supported maximum {cap}")]
    UnsupportedSize { tbs: u64, cap: u64 },

    #[error("parse error at {key}: {reason}")]
    Parse { key: String, reason: String },

    #[error("calibration failed: {reason}")]
    Calibration {
        reason: String,
        trace: Vec<(f64, f64)>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reads a whole file, naming it in the error.
pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

impl Error {
    pub(crate) fn parse(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
