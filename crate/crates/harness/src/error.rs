use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("every seed aborted; see the log for per-seed diagnostics")]
    AllSeedsFailed,

    #[error("every learning rate in the sweep diverged")]
    SweepFailed,

    #[error("seeds have ragged epoch sets; cannot select a common best epoch")]
    RaggedEpochs,

    #[error("split {0} is empty")]
    EmptySplit(&'static str),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Tensor(#[from] guidelab_tensor::TensorError),

    #[error(transparent)]
    Zoo(#[from] guidelab_zoo::ZooError),

    #[error(transparent)]
    Guidance(#[from] guidelab_guidance::GuidanceError),

    #[error(transparent)]
    Task(#[from] guidelab_tasks::TaskError),

    #[error(transparent)]
    Analysis(#[from] guidelab_analysis::AnalysisError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        HarnessError::Json {
            path: path.into(),
            source,
        }
    }
}
