use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a correlation or formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A conduction path of zero inner radius; the core is unreachable.
    #[error("infinite thermal resistance")]
    InfiniteResistance,

    #[error("invalid input: {0}")]
    InvalidSpec(String),

    #[error("solver did not converge after {iterations} iterations (residual norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in Newton iteration")]
    SingularJacobian,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("configuration error at `{path}` (line {line}, column {column}): {message}")]
    Config {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
