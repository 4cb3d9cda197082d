use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("parameter {t} lies outside [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("domain mismatch: [{a0}, {a1}] vs [{b0}, {b1}]")]
    DomainMismatch { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(String),

    #[error("matrix [{e}, {f}; {f}, {g}] is not symmetric positive definite")]
    NotPositiveDefinite { e: f64, f: f64, g: f64 },

    #[error("degenerate surface point at ({0}, {1})")]
    DegenerateSurface(f64, f64),

    #[error("kernel evaluated at its singular point ({0}, {1})")]
    SingularPoint(f64, f64),

    #[error("unknown surface `{0}`")]
    UnknownSurface(String),

    #[error("source point ({s0}, {s1}) is {distance} away from the integration domain (limit {limit})")]
    SourceTooFar { s0: f64, s1: f64, distance: f64, limit: f64 },

    #[error("non-finite integrand value at ({0}, {1})")]
    NonFinite(f64, f64),

    #[error("oracle did not converge: best value {value}, error estimate {estimate}")]
    NonConvergence { value: f64, estimate: f64 },

    #[error("invalid error sequence: {0}")]
    InvalidErrors(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
