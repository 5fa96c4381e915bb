use guidelab_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZooError {
    /// The spec violates a structural invariant (bad field combination,
    /// out-of-range value, missing required field).
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    /// The batch handed to `forward_with_taps` does not match the input
    /// contract implied by the spec.
    #[error("batch does not match network input: {0}")]
    BatchMismatch(String),
    #[error("sequence length {len} exceeds context_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    /// A saved state carries a tensor this network does not own.
    #[error("unknown state entry {0:?}")]
    UnknownState(String),
    /// A saved state lacks tensors this network needs.
    #[error("saved state is missing {0:?}")]
    MissingState(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, ZooError>;
