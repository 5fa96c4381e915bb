use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("prediction sets cover different example ids")]
    IdMismatch,

    #[error("duplicate example id {0}")]
    DuplicateId(u64),

    #[error("size mismatch: {what} has {got} entries, expected {expect}")]
    SizeMismatch {
        what: &'static str,
        expect: usize,
        got: usize,
    },

    #[error(
        "error consistency is undefined when expected overlap is 1 \
         (both predictors perfect or both always wrong)"
    )]
    UndefinedKappa,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("log file {path} violates the schema: {reason}")]
    Schema { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

impl AnalysisError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AnalysisError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        AnalysisError::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        AnalysisError::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
