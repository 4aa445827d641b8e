use alloc::string::String;
use core::fmt;

use crate::expr::{EvalError, ParseDiagnostic};
use crate::quadrature::QuadratureError;
use crate::rect::{GeometryError, IndexSubset};

/// Umbrella error for the crate's fallible operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Geometry(GeometryError),
    Parse(ParseDiagnostic),
    Eval(EvalError),
    Quadrature(QuadratureError),
    /// A face integral of the Newton-Leibniz sum failed.
    Face {
        subset: IndexSubset,
        source: QuadratureError,
    },
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Geometry(e) => write!(f, "{e}"),
            Self::Parse(e) => write!(f, "parse error {e}"),
            Self::Eval(e) => write!(f, "evaluation error: {e}"),
            Self::Quadrature(e) => write!(f, "{e}"),
            Self::Face { subset, source } => write!(f, "face {subset}: {source}"),
            Self::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}

impl From<GeometryError> for Error {
    fn from(e: GeometryError) -> Self {
        Self::Geometry(e)
    }
}

impl From<ParseDiagnostic> for Error {
    fn from(e: ParseDiagnostic) -> Self {
        Self::Parse(e)
    }
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Self::Eval(e)
    }
}

impl From<QuadratureError> for Error {
    fn from(e: QuadratureError) -> Self {
        Self::Quadrature(e)
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
