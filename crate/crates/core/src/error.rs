//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape or length mismatch between related containers.
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A value violates a domain invariant.
    #[error("invalid value for {name}: {value} (allowed {allowed})")]
    InvalidValue {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    /// Bad configuration that cannot be expressed as a single value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Index out of range.
    #[error("index {index} out of range for {context} of length {len}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    /// Grid sampling requires the sample count to be a perfect power of the
    /// number of gridded parameters.
    #[error("grid sampling needs n = g^{dims} for integer g >= 1, got n = {n}")]
    GridSize { n: usize, dims: usize },

    /// A lookup-table query fell outside the knot range of an axis.
    #[error("query {value} outside knot range [{low}, {high}] of axis {axis}")]
    Extrapolation {
        axis: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    /// Building a lookup table would exceed the configured memory cap.
    #[error("lookup table would need {bytes} bytes, above the cap of {cap} bytes")]
    LutTooLarge { bytes: u64, cap: u64 },

    /// Training produced a non-finite loss.
    #[error("training diverged (non-finite loss) at channel {channel}, epoch {epoch}")]
    Diverged { channel: usize, epoch: usize },

    /// A numerical routine failed to make progress or hit a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed serialized input.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
