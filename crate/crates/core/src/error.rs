use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("division by an element that is zero to the working precision")]
    DivisionByZeroToPrecision,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("unbounded index set: {0}")]
    UnboundedSet(String),
    #[error("index order violation: {0}")]
    IndexOrderViolation(String),
    #[error("degree too high: {0}")]
    DegreeTooHigh(String),
    #[error("index too large: {0}")]
    IndexTooLarge(String),
    #[error("depth insufficient: {0}")]
    DepthInsufficient(String),
    #[error("index is not of top degree: {0}")]
    NotTopDegree(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
