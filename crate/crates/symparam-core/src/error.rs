use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Error type shared across the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Tensor shapes do not agree for the requested operation.
    ShapeMismatch(String),
    /// An argument is outside the mathematical domain of the operation.
    Domain(String),
    /// API misuse (backward twice, non-scalar loss, empty dataset, ...).
    Usage(String),
    /// A forward pass or training step produced a non-finite value.
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
