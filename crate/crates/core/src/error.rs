use thiserror::Error;

/// Errors shared across the accounting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its documented bound.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An enumeration or composition would exceed its size guard.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    /// A target delta outside what the composed density can reach.
    #[error(
        "target delta {target:.6e} outside achievable range [{min:.6e}, {max:.6e}]"
    )]
    DeltaOutOfRange { target: f64, min: f64, max: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn guard(msg: impl Into<String>) -> Self {
        Error::ResourceGuard(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
