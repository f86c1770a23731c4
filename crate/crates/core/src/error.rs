use thiserror::Error;

#[derive(Debug, Error)]
pub enum HfbError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("kernel is singular at r = s = 0")]
    SingularPoint,

    #[error("derivative is ill-conditioned: spectral gap {gap:e} at mu = {mu}")]
    IllConditionedDerivative { mu: f64, gap: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HfbError>;

pub(crate) fn invalid(msg: impl Into<String>) -> HfbError {
    HfbError::InvalidArgument(msg.into())
}
