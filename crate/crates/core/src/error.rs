//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by validation, solvers and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("probability masses sum to {sum}, expected 1")]
    MassMismatch { sum: f64 },
    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("empty distribution")]
    Empty,
    #[error("ragged matrix: row {row} has length {len}, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("NaN produced in {context}")]
    NotANumber { context: &'static str },
    #[error("undefined arithmetic: {0}")]
    Undefined(&'static str),
    #[error("order out of range: {0}")]
    OrderOutOfRange(String),
    #[error("value {value} out of range for {what}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("negative discriminant {0:e}")]
    NegativeDiscriminant(f64),
    #[error("no distribution at the requested divergence level {level}")]
    InfeasibleLevel { level: f64 },
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("unsupported sign case: {0}")]
    UnsupportedSignCase(String),
    #[error("alphabet of size {0} exceeds the sweep limit of 6")]
    AlphabetTooLarge(usize),
    #[error("all points are collinear; no 2D envelope exists")]
    DegenerateGeometry,
    #[error("too few valid grid points ({0})")]
    TooFewPoints(usize),
    #[error("query ({0}, {1}) lies outside the grid span")]
    OutOfSpan(f64, f64),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by numerical non-convergence rather than bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::NegativeDiscriminant(_))
    }
}
