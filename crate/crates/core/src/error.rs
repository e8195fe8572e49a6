use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numeric error: {message} (estimate {estimate:e}, error bound {error:e}, evaluations {evaluations})")]
    Numeric { message: String, estimate: f64, error: f64, evaluations: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric { message: msg.into(), estimate: f64::NAN, error: f64::NAN, evaluations: 0 }
    }

    /// Usage and configuration mistakes, as opposed to failures of the mathematics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
