use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("magnitude tie at the quantile boundary (q = {q})")]
    TieAtQuantile { q: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("model is inadmissible for the scale-free criterion (delta = {delta})")]
    InadmissibleModel { delta: f64 },

    #[error("residual sum of squares must be positive, got {0}")]
    NonpositiveRss(f64),

    #[error("every cardinality in the grid was rejected")]
    AllInadmissible,

    #[error("covariance is not positive definite: {0}")]
    NotPositiveDefinite(String),
}
