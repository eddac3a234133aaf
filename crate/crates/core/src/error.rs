use thiserror::Error;

use crate::linalg::Matrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a kernel, density or closed form.
    #[error("domain error: {what} (value {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The integrand was not finite at one of the measure's nodes.
    #[error("integrand not finite at node x = {node} (value {value})")]
    Integration { node: f64, value: f64 },

    #[error("line {line}: cannot parse {content:?} as a number")]
    Parse { line: usize, content: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("singular matrix {matrix:?}")]
    Singular { matrix: Matrix },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The objective handed to a solver evaluated to NaN or infinity.
    #[error("objective not finite at {at:?}")]
    NonFinite { at: Vec<f64> },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
