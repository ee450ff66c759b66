use thiserror::Error;

/// Errors raised by kernels, models, estimators and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A factor produced NaN or `+inf`; `-inf` at the proposal is a plain rejection.
    #[error("factor {factor} produced a non-finite log ratio ({value})")]
    Evaluation { factor: usize, value: f64 },

    #[error("non-finite gradient component at index {index}")]
    Gradient { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
