use thiserror::Error;

/// Errors produced by the math, quadrature, simulation and CLI layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported condition: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, required {required:.3e}")]
    QuadratureAccuracy { achieved: f64, required: f64 },

    #[error(
        "Monte-Carlo acceptance budget exhausted: {accepted} accepted in {attempted} attempts \
         (rate {rate:.3e})"
    )]
    McBudget {
        accepted: u64,
        attempted: u64,
        rate: f64,
    },

    #[error("at sigma = {sigma}: {source}")]
    AtSigma {
        sigma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_sigma(self, sigma: f64) -> Error {
        Error::AtSigma {
            sigma,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
