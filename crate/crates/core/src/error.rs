use thiserror::Error;

use crate::perfmodel::{CostTableId, Primitive};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("linear combination needs at least one vector")]
    EmptyCombination,

    #[error("coefficient count {coeffs} does not match vector count {vecs}")]
    CoefficientCount { coeffs: usize, vecs: usize },

    #[error("state vectors must be non-empty")]
    EmptyState,

    #[error("grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("diffusion coefficient must be positive, got {value} at x = {x}")]
    NonPositiveKappa { x: f64, value: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("singular matrix in dense solve")]
    Singular,

    #[error("unsupported phi index {0} (expected 0..=3)")]
    UnsupportedPhi(usize),

    #[error("invalid spectral bounds: {0}")]
    InvalidBounds(String),

    #[error("primitive {primitive:?} is not part of the {table:?} cost table")]
    PrimitiveNotInTable {
        primitive: Primitive,
        table: CostTableId,
    },

    #[error("zeta must be a finite value >= 1, got {0}")]
    InvalidZeta(f64),

    #[error("Krylov dimension cap {0} exceeded")]
    KrylovCapExceeded(usize),

    #[error("duplicate interpolation point {0}")]
    DuplicatePoint(f64),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("density is not positive (min {min}) at grid index {index}")]
    NonPositiveDensity { index: usize, min: f64 },

    #[error("phi evaluation did not converge at step {step} (t = {t})")]
    PhiFailure { step: usize, t: f64 },

    #[error("integration became unstable at step {step} (t = {t}, max norm {norm:e})")]
    Instability { step: usize, t: f64, norm: f64 },

    #[error("reference solution did not converge within {max_steps} steps")]
    ReferenceNotConverged { max_steps: usize },

    #[error("zero reference norm")]
    ZeroReference,

    #[error("invalid experiment: {0}")]
    InvalidSpec(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
