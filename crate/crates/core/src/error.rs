use thiserror::Error;

/// Errors produced by the library. Parse failures carry the 1-based line
/// (or record) number they were detected at.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Data(String),

    #[error("recording id mismatch: annotation `{annotation}` vs hypothesis `{hypothesis}`")]
    RecordingMismatch {
        annotation: String,
        hypothesis: String,
    },

    #[error("training diverged at step {step}: loss is not finite")]
    Diverged { step: usize },
}

impl ScdError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        ScdError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        ScdError::InvalidArgument(message.into())
    }
}

pub type Result<T, E = ScdError> = std::result::Result<T, E>;
