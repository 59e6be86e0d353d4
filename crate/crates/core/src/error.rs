use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: invalid record: {message}")]
    Validation { line: usize, message: String },

    #[error("leg {leg}: {source}")]
    Leg {
        leg: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("surrogate model: {0}")]
    Surrogate(String),

    #[error("invalid permutation: {0}")]
    Permutation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_leg(self, leg: usize) -> Self {
        Error::Leg {
            leg,
            source: Box::new(self),
        }
    }
}
