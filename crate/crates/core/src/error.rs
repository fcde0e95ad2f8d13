use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point (or segment) lies outside the chart domain.
    #[error("point {point:?} outside chart domain {domain:?}")]
    Domain {
        point: Vec<f64>,
        domain: Vec<[f64; 2]>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A search was stopped because it would exceed its declared work budget.
    /// Results are never silently truncated.
    #[error("budget exceeded in {context}: {detail}")]
    Budget { context: String, detail: String },

    #[error("singular or near-singular matrix: {0}")]
    Singular(String),

    #[error("integer overflow in {0}")]
    Overflow(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn budget(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Budget {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
