use std::fmt;
use std::path::PathBuf;

/// A single manifest or corpus validation problem.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Issue {
    pub session_id: String,
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn new(session_id: impl Into<String>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { session_id: session_id.into(), field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "session {}: field `{}`: {}", self.session_id, self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("manifest validation failed ({} issue(s)): {}", .0.len(), join_issues(.0))]
    Manifest(Vec<Issue>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("diarization: {0}")]
    Diarization(String),

    #[error("conversation: {0}")]
    Conversation(String),

    #[error("features: {0}")]
    Feature(String),

    #[error("model: {0}")]
    Model(String),

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
