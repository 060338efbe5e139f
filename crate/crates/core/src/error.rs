use thiserror::Error;

/// Errors raised by estimators, distributions and the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The quantile density is unbounded because the density vanishes.
    #[error("singular quantile density: {0}")]
    Singularity(String),
    /// The sample carries no spread (zero variance, zero IQR, zero density estimate).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("sample too small: {0}")]
    SampleTooSmall(String),
    /// A required population moment does not exist.
    #[error("moment does not exist: {0}")]
    Moment(String),
    /// The estimand cannot be log-transformed (non-positive ratio).
    #[error("log-domain error: {0}")]
    LogDomain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singularity(_) => "singularity",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::SampleTooSmall(_) => "sample_too_small",
            Error::Moment(_) => "moment",
            Error::LogDomain(_) => "log_domain",
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateSample(msg.into())
    }
}
