use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the admissible range of the operation that owns it.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("time step {dt:e} violates the CFL bound; admissible dt <= {max_dt:e}")]
    StepSize { dt: f64, max_dt: f64 },

    #[error("non-finite values detected at t = {time}")]
    NonFinite { time: f64 },

    #[error("density became non-positive (min {min:e}) at t = {time}")]
    DensityNonPositive { time: f64, min: f64 },

    #[error("variable-density pressure solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    PoissonNotConverged { iterations: usize, residual: f64 },

    #[error("time axes do not match: {0}")]
    AxisMismatch(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
