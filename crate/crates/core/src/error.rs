use thiserror::Error;

/// Errors produced by the dilation, kernel and maximal-function routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {0} outside supported range 1..=16")]
    UnsupportedDimension(usize),

    #[error("matrix or vector contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("numerical rank is ambiguous: {detail}")]
    AmbiguousRank { detail: String },

    #[error("spectrum is not real and positive: {detail}")]
    NonPositiveSpectrum { detail: String },

    #[error("matrix is not expansive: smallest eigenvalue modulus {min_modulus}")]
    NotExpansive { min_modulus: f64 },

    #[error("generator is not expansive: {detail}")]
    NotExpansiveGenerator { detail: String },

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("no expansivity certificate with k <= {max_k}")]
    CertificateNotFound { max_k: u32 },

    #[error("constructed ellipsoids do not nest at level {level}")]
    NestingFailure { level: i32 },

    #[error("omega constant exceeds {cap}")]
    OmegaNotFound { cap: u32 },

    #[error("root finder did not converge for the quasi-norm level set")]
    RootNotConverged,

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("kernel does not fit the box at scale {scale}: width {width} > box side {side}")]
    Truncation { scale: f64, width: f64, side: f64 },

    #[error("derivative of order {order} is not resolved by the grid")]
    DerivativeUnresolved { order: usize },

    #[error("supports overlap at {count} grid points")]
    OverlappingSupports { count: usize },

    #[error("kernel kind `{kind}` is incompatible with {detail}")]
    KernelMismatch { kind: &'static str, detail: String },

    #[error("field format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
