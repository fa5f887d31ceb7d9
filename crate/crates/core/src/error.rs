use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value failed validation. `key` is a dotted path into
    /// the scenario or model document when one is known.
    #[error("{}", invalid_text(.key, .message))]
    Invalid { key: String, message: String },

    #[error("dimension mismatch: {what} has length {actual}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

fn invalid_text(key: &str, message: &str) -> String {
    if key.is_empty() {
        format!("invalid document: {message}")
    } else {
        format!("invalid `{key}`: {message}")
    }
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the input document rather than by the run.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. } | Error::Unsupported(_))
    }
}
