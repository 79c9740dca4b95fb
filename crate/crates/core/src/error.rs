use thiserror::Error;

use crate::metrics::MetricName;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (bad index, empty input, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The metric is defined but carries no information about the Q-function
    /// (for example no positive transitions). `value` is the score that the
    /// formula yields anyway.
    #[error("{metric} is degenerate on this dataset: {reason}")]
    Degenerate {
        metric: MetricName,
        value: f64,
        reason: String,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("episode {episode} step {t}: missing Q annotation")]
    MissingAnnotation { episode: String, t: usize },

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// The value carried by a degenerate-score error, if this is one.
    pub fn degenerate_value(&self) -> Option<f64> {
        match self {
            Error::Degenerate { value, .. } => Some(*value),
            _ => None,
        }
    }
}
