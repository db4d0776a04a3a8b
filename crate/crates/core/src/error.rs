//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by profile evaluation, grid I/O, operator assembly and the
/// microlocal maps.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument violates its domain (negative radius, bad extent, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Division by a vanishing quantity, e.g. q(r) = 0.
    #[error("singularity: {0}")]
    Singularity(String),

    /// An operation requires the Bolker condition (g strictly monotone) and the
    /// profile violates it on the requested range.
    #[error("bolker violation: {0}")]
    BolkerViolation(String),

    /// A value falls outside the attainable range of a monotone map.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The covector has a vanishing component and maps to no data singularity.
    #[error("invisible covector: vertical and horizontal covectors are not in the range of the canonical relation")]
    InvisibleCovector,

    /// Profile is unusable on the requested range (q not positive, bad knots, ...).
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    /// Grid or matrix shapes do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// On-disk format violation (magic, header fields, payload size).
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
