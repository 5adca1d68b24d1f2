use thiserror::Error;

/// Errors raised by the HSS engine and the algorithms built on it.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HssError {
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("share conversion failed: {0}")]
    Conversion(String),
    #[error("malformed group element: {0}")]
    Decode(String),
    #[error("protocol misuse: {0}")]
    Misuse(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("unsupported output modulus")]
    UnsupportedModulus,
}

pub type Result<T, E = HssError> = std::result::Result<T, E>;
