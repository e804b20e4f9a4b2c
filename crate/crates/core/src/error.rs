use thiserror::Error;

/// Crate-wide error type. Usage errors are caller mistakes (bad dimensions,
/// out-of-range indices, inadmissible configs); the other variants report
/// failures of numerical procedures themselves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),

    #[error("construction: {0}")]
    Construction(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("optimizer diverged: {0}")]
    Diverged(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
