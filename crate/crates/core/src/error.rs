use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not reach tolerance {requested:e} (achieved error estimate {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("lambda below critical value: {lambda} <= lambda_c = {lambda_c}")]
    Subcritical { lambda: f64, lambda_c: f64 },

    #[error("a-ladder exceeded a = {a_max} without converging (last relative change {last_change:e})")]
    LadderExhausted { a_max: f64, last_change: f64 },

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
