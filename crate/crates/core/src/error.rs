use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// A supplied minorant/majorant certificate does not bound the potential.
    #[error("certificate rejected at r = {r}: {reason}")]
    CertificateViolated { r: f64, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("index {index} out of range for {len} particles")]
    IndexOutOfRange { index: usize, len: usize },

    /// Schema or usage error in a user supplied config (exit code 2).
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    /// A computation refused to run or could not meet its tolerance (exit code 1).
    #[error("refused: {0}")]
    Refusal(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error: 2 for usage/config problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
