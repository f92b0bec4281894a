//! Error type shared across the library.

use thiserror::Error;

/// Errors surfaced by construction, solvers, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain construction rejected the input (empty, bad weights, bad edges).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    /// A labeling does not fit the graph or violates cluster requirements.
    #[error("invalid cluster: {0}")]
    InvalidCluster(String),
    /// Chamber index out of range for the labeling.
    #[error("chamber index {index} out of range (N = {n})")]
    ChamberIndex { index: u32, n: u32 },
    /// An enumeration cap would be exceeded.
    #[error("instance too large for {what}: {size} exceeds cap {cap}")]
    SizeCap { what: &'static str, size: u128, cap: u128 },
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An iterative solver hit its iteration cap before meeting tolerance.
    #[error("solver did not converge within {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
    /// No valid seeding exists (e.g. more chambers than vertices).
    #[error("no valid seed: {0}")]
    NoValidSeed(String),
    /// Input file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
