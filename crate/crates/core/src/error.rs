use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the learners, oracles and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A call arrived out of order, e.g. two draws without a feed in between.
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("value {value} outside [{lower}, {upper}]")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("set function is not monotone nondecreasing: g({smaller:?}) = {smaller_value} > g({larger:?}) = {larger_value}")]
    NotMonotone {
        smaller: Vec<usize>,
        smaller_value: f64,
        larger: Vec<usize>,
        larger_value: f64,
    },

    #[error("set function is not normalized: g(empty) = {0}")]
    NotNormalized(f64),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
