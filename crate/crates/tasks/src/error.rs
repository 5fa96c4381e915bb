use std::path::PathBuf;

/// Errors raised while generating, loading, or scoring datasets.
#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),

    #[error("length range {lo}..={hi} admits no feasible example length")]
    InfeasibleLengths { lo: usize, hi: usize },

    #[error("corpus too small: need at least {need} bytes, got {got}")]
    CorpusTooSmall { need: usize, got: usize },

    #[error("corpus is not valid UTF-8 text")]
    CorpusNotUtf8,

    #[error("malformed dataset file {path}: {reason}")]
    BadFormat { path: PathBuf, reason: String },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("size mismatch in {what}: expected {expect}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expect: usize,
        got: usize,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, TaskError>;

impl TaskError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TaskError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn bad_format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        TaskError::BadFormat {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
