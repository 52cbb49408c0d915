//! Crate-wide error type. Variants map onto distinct CLI exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration (flag values, impossible generator settings).
    #[error("config: {0}")]
    Config(String),

    /// Malformed or inconsistent dataset / dump / checkpoint content.
    #[error("data: {0}")]
    Data(String),

    /// Tensor shape mismatch; message names both shapes.
    #[error("shape: {0}")]
    Shape(String),

    /// An API precondition was violated (programming error, not user input).
    #[error("contract: {0}")]
    Contract(String),

    /// A computation produced NaN or infinity.
    #[error("non-finite: {0}")]
    NonFinite(String),

    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the CLI. 0 is success, 2 is reserved for
    /// argument-parse failures (clap's convention).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Io { .. } => 4,
            Error::Data(_) | Error::Json(_) | Error::Csv(_) => 5,
            Error::Shape(_) | Error::Contract(_) | Error::NonFinite(_) => 6,
        }
    }
}
