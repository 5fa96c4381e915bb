use guidelab_metrics::MetricError;
use guidelab_tensor::TensorError;
use guidelab_zoo::ZooError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GuidanceError {
    /// The guide has more taps than the target; computations cannot be
    /// spread over fewer layers than the guide provides.
    #[error("unsupported mapping: guide has {l} taps but target only {t}")]
    GuideDenserThanTarget { l: usize, t: usize },
    #[error("tap counts must be at least 1, got target {t} / guide {l}")]
    EmptyTapCount { t: usize, l: usize },
    #[error("activation record length {got} does not match mapping's {expect} {side} taps")]
    RecordLength {
        side: &'static str,
        expect: usize,
        got: usize,
    },
    #[error("target batch {target} and guide batch {guide} differ")]
    BatchMismatch { target: usize, guide: usize },
    /// Guided training needs at least 3 samples per batch for the
    /// representational metrics to be meaningful.
    #[error("guided loss needs a batch of at least {min}, got {got}")]
    BatchTooSmall { min: usize, got: usize },
    #[error("pad mask has {got} entries but the activation has {expect} positions")]
    MaskShape { expect: usize, got: usize },
    #[error("cannot flatten a rank-{0} activation")]
    UnsupportedRank(usize),
    #[error("task loss must be a scalar, got shape {0:?}")]
    NonScalarTaskLoss(Vec<usize>),
    #[error("invalid guidance config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Zoo(#[from] ZooError),
}

pub type Result<T> = std::result::Result<T, GuidanceError>;
