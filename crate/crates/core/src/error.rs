use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Jones-matrix eigenanalysis cannot resolve a phase difference of π or more.
    #[error("DGD measurement aliased: d_omega * tau = {product:.4} is not below pi")]
    Aliasing { product: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("QBER undefined: no clicks recorded")]
    UndefinedQber,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("oracle check failed: max distance {max_distance:e} exceeds {threshold:e}")]
    OracleCheckFailed { max_distance: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
