use thiserror::Error;

/// Library-wide error type. Variants map onto the CLI's exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shape or dimensionality mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// NaN or infinity where finite values are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Invalid or infeasible configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Data violates a pipeline contract (e.g. faulty sample in an
    /// autoencoder training split).
    #[error("data contract violation: {0}")]
    Data(String),

    /// Model file problems: version mismatch, corruption, missing metadata.
    #[error("model error: {0}")]
    Model(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: distinct nonzero codes per class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Shape(_) | Error::NonFinite(_) => 3,
            Error::Io(_) | Error::Json(_) => 4,
            Error::Model(_) => 5,
        }
    }
}
