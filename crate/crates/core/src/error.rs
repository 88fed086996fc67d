use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a grid or a size do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The request exceeds what the exact (enumerative) routines support.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error(
        "solver did not converge after {iterations} iterations \
         (primal residual {primal:.3e}, dual residual {dual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    /// Malformed input record, with a 1-based line number.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

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

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
