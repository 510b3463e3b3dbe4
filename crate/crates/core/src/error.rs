use thiserror::Error;

/// Errors raised by the optimizer and its components.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PgloError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Covariance factorization failed even at the largest jitter level.
    /// `region` is `None` for the global model.
    #[error("model fit error ({}): {message}", region.map(|k| format!("region {k}")).unwrap_or_else(|| "global model".to_string()))]
    ModelFit {
        region: Option<usize>,
        message: String,
    },

    #[error("acquisition error: {0}")]
    Acquisition(String),
}

pub type Result<T> = std::result::Result<T, PgloError>;

impl PgloError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        PgloError::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        PgloError::Domain(msg.into())
    }
}
