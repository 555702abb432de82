//! Error type shared by every module of the library.

use std::fmt;

/// Errors surfaced by model construction, geometry, quadrature and estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Stability index outside the open interval (0, 2).
    InvalidAlpha(f64),
    /// A precondition on a plain parameter failed; the message names it.
    InvalidParameter(String),
    /// Vector or matrix dimensions disagree.
    DimensionMismatch { expected: usize, got: usize },
    /// A linear representation contains a zero column.
    ZeroColumn(usize),
    /// The operation needs a purely atomic spectral measure.
    NonAtomicMeasure,
    /// The region tree does not support the requested operation.
    /// `node` names the offending leaf or combinator.
    UnsupportedRegion { op: &'static str, node: &'static str },
    /// The closure of the region contains the origin (or the gap could not be
    /// certified positive), so scale-limit operations are undefined.
    OriginGap(f64),
    /// A quadrature or iterative routine failed to meet its accuracy target.
    Convergence(String),
    /// Fewer data points than the fit or test requires.
    InsufficientData(String),
    /// No subset of spectral directions reaches the region at any order.
    NoReachability,
    /// Unknown closed-form reference or bank identifier.
    UnknownReference(String),
    /// Scenario or region JSON failed validation after parsing.
    Schema(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidAlpha(a) => write!(f, "stability index {a} outside (0, 2)"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::ZeroColumn(i) => write!(f, "matrix column {i} is zero"),
            Error::NonAtomicMeasure => {
                write!(f, "operation requires a purely atomic spectral measure")
            }
            Error::UnsupportedRegion { op, node } => {
                write!(f, "region node `{node}` does not support {op}")
            }
            Error::OriginGap(g) => {
                write!(f, "origin gap {g} is not positive; region closure meets 0")
            }
            Error::Convergence(msg) => write!(f, "convergence failure: {msg}"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::NoReachability => {
                write!(f, "no direction subset reaches the region at any order")
            }
            Error::UnknownReference(id) => write!(f, "unknown reference id `{id}`"),
            Error::Schema(msg) => write!(f, "schema error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
