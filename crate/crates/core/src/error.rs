use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the physical or mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{file}:{line}: column `{column}`: {message}")]
    Parse {
        file: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{file}: {message}")]
    Schema { file: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient; use a ridge penalty lambda > 0")]
    RankDeficient,

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("no anchor value: context has no present observation")]
    NoAnchor,

    #[error("missing exogenous future values for channel `{0}`")]
    MissingExoFuture(String),

    #[error("unknown model `{model_id}` for regime {regime}")]
    UnknownModel { regime: String, model_id: String },

    #[error("{path}: {source}")]
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
