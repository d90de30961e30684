use thiserror::Error;

/// Errors raised by the numerical engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max |A - A*| = {0:e})")]
    NotHermitian(f64),

    #[error("negative spectrum: min eigenvalue {0:e} below tolerance")]
    NegativeSpectrum(f64),

    #[error("invalid Schatten exponent p = {0}")]
    InvalidP(f64),

    #[error("malformed map: {0}")]
    MalformedMap(String),

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("carrier does not match the semigroup or multiplier kind: {0}")]
    CarrierMismatch(String),

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("positivity violation: PSD gap {gap:e} below -{tol:e}")]
    PositivityViolation { gap: f64, tol: f64 },

    #[error("carrier does not match the metric variant: {0}")]
    MetricCarrierMismatch(String),

    #[error("empty radius list")]
    EmptyRadii,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("tail bound fails: {0}")]
    TailUnbounded(String),

    #[error("method {method} unsupported for variant {variant}")]
    MethodUnsupported { method: String, variant: String },

    #[error("sample out of range: {0}")]
    SampleOutOfRange(String),

    #[error("radius too large: {0}")]
    RadiusTooLarge(String),

    #[error("twist parameters differ")]
    ParamMismatch,

    #[error("GNS box too small: L = {l}, need at least {need}")]
    BoxTooSmall { l: usize, need: usize },

    #[error("length function is not symmetric or not normalized: {0}")]
    AsymmetricPsi(String),

    #[error("invalid group table: {0}")]
    InvalidGroup(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
