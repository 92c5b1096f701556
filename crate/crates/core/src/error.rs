use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge (best estimate {best:e}, error {error:e})")]
    Convergence { best: f64, error: f64 },

    #[error("method `{method}` is not supported for the {family} family")]
    UnsupportedMethod {
        method: &'static str,
        family: &'static str,
    },

    #[error("no interior maximum in bracket [{lo}, {hi}]")]
    FlatBracket { lo: f64, hi: f64 },

    #[error("malformed spectral table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
