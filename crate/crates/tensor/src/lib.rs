//! Minimal dense-tensor engine with reverse-mode autodiff.
//!
//! Design constraints that shaped this crate:
//! - bit-reproducible: fixed accumulation order everywhere, no threading, no
//!   fast-math; the same seed gives the same bytes in logs and checkpoints
//! - fail loud: every op returns `Result` and NaN/Inf anywhere is an error,
//!   not a silent poison value
//! - two dtypes only: f32 for training, f64 for oracles and gradient checks

pub mod check;

mod autograd;
mod checkpoint;
mod error;
mod ops;
mod optim;
mod rng;
mod scalar;
mod tensor;

pub use autograd::{grad_enabled, no_grad, GradTape, NoGradGuard};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointData, OptimSnapshot};
pub use error::{Result, TensorError};
pub use ops::NormMode;
pub use optim::{clip_grad_norm, zero_grads, Adam, AdamConfig};
pub use rng::RngState;
pub use scalar::Element;
pub use tensor::{Tensor, TensorId};
