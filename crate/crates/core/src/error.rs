use alloc::boxed::Box;
use alloc::string::String;

/// Errors produced by the geometry, registration and feature routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("eigenvalue {eigenvalue:e} is outside the domain of the matrix {function}")]
    NumericalRange {
        function: &'static str,
        eigenvalue: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("points are antipodal; the logarithm is not unique")]
    Antipodal,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("frame {index}: {source}")]
    Frame { index: usize, source: Box<Error> },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
