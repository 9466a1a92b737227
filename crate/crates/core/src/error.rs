use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: only 1 and 2 are supported")]
    UnsupportedDim(usize),
    #[error("half_length must be positive and finite, got {0}")]
    BadHalfLength(f64),
    #[error("points_per_axis must be even and at least 8, got {0}")]
    BadPointCount(usize),
    #[error("shape mismatch: expected {expected} samples, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("non-finite sample at flat index {0}")]
    NonFinite(usize),
    #[error("fractional order s must lie in (0,1), got {0}")]
    BadOrder(f64),
    #[error("Riesz exponent mu must satisfy 0 < mu < N = {dim}, got {mu}")]
    BadRieszExponent { mu: f64, dim: usize },
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error("Nehari fibering parameter t must be positive, got {0}")]
    BadFiberParameter(f64),
    #[error("dead seed: the positive part of the field vanishes")]
    DeadSeed,
    #[error("Nehari bracket failure: no sign change of h'(t) after {0} expansions")]
    NehariBracket(usize),
    #[error("zero field has no barycenter")]
    ZeroField,
    #[error("well {well:?} is not inside the configured region with margin delta = {delta}")]
    WellOutsideRegion { well: Vec<f64>, delta: f64 },
    #[error("interpolation target |z| = {needed} exceeds the source box half-length {available}")]
    InterpolationRange { needed: f64, available: f64 },
    #[error("invalid solver options: {0}")]
    BadOptions(String),
}

pub type Result<T> = std::result::Result<T, Error>;
