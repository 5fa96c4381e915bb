use thiserror::Error;

#[derive(Error, Debug)]
pub enum MetricError {
    #[error("activation matrix needs at least {min} samples, got {got}")]
    DegenerateBatch { min: usize, got: usize },

    #[error("activation matrix must be rank 2 (b x d), got shape {shape:?}")]
    BadShape { shape: Vec<usize> },

    #[error("gram matrix is already centered")]
    AlreadyCentered,

    #[error("gram matrix must be centered before HSIC")]
    NotCentered,

    #[error("batch sizes differ: {lhs} vs {rhs}")]
    SizeMismatch { lhs: usize, rhs: usize },

    #[error("constant representation for `{layer}`: similarity is undefined")]
    DegenerateRepresentation { layer: String },

    #[error("zero-norm sample row {row} in `{layer}`: cosine distance undefined")]
    DegenerateSample { layer: String, row: usize },

    #[error("distance lower triangle of `{layer}` has zero variance")]
    ZeroVariance { layer: String },

    #[error(transparent)]
    Tensor(#[from] guidelab_tensor::TensorError),
}

pub type Result<T> = std::result::Result<T, MetricError>;
