use kssim_core::KsError;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("{key}: {message}")]
    Config { key: String, message: String },
    #[error("numerical failure in run {run}: {source}")]
    Numerical {
        run: usize,
        #[source]
        source: KsError,
    },
    #[error("analysis: {0}")]
    Analysis(#[from] KsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad configuration, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Syntax(_) | HarnessError::Config { .. } => 2,
            HarnessError::Numerical { .. } | HarnessError::Analysis(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
