use thiserror::Error;

/// Errors for bound evaluation, root finding and simulation configs.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("risk level {alpha} not reachable; smallest achievable envelope risk is {min_risk}")]
    UnreachableRisk { alpha: f64, min_risk: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty sample: {0}")]
    EmptySample(&'static str),

    #[error("root finding failed: {0}")]
    RootFinding(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
