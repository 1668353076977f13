use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or element lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration or simulation budget would be exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    /// A numerical procedure failed to meet its tolerance.
    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    /// A field sample was queried outside its sampled region.
    #[error("region error: {0}")]
    Region(String),

    /// A Monte-Carlo estimate is undefined for the drawn samples.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Configuration validation failed; one entry per offending field.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn resource<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Resource(msg.into()))
}
