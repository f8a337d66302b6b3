use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The requested computation exceeds a configured resource budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The input is degenerate for the requested quantity (e.g. a ratio against zero).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
