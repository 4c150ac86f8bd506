use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension n = {0} is too small; the sphere code needs n >= 3")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degree {degree} exceeds the evaluator's maximum {max}")]
    DegreeOutOfRange { degree: usize, max: usize },
    #[error("argument t = {0} lies outside [-1, 1]")]
    ArgumentOutOfRange(f64),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vector has zero or non-finite norm")]
    DegenerateVector,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("activation `{0}` has no Taylor coefficients")]
    MissingTaylor(String),
    #[error("series tail bound {tail:.3e} exceeds the allowed {allowed:.3e}")]
    TailBoundExceeded { tail: f64, allowed: f64 },
    #[error("family of size {size} exceeds the enumeration cap {cap}")]
    FamilyTooLarge { size: usize, cap: usize },
    #[error("query rejected: {0}")]
    InvalidQuery(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
