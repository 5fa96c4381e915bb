//! The guided training loss: spread a frozen guide network's layers over a
//! target network's layers, compare the paired activations with a
//! representational dissimilarity metric, and add the unweighted sum of
//! those dissimilarities to the task loss. The guide contributes constants
//! only; nothing here ever routes a gradient into it.

mod config;
mod error;
mod flatten;
mod guide;
mod loss;
mod mapping;

pub use config::{GuidanceConfig, GuideInputMode, GuideMode, MetricKind};
pub use error::{GuidanceError, Result};
pub use guidelab_metrics::MetricError;
pub use flatten::flatten_activation;
pub use guide::{guide_batch, guide_forward};
pub use loss::{guided_loss, GuidedLossBreakdown, MIN_GUIDED_BATCH};
pub use mapping::{compute_layer_mapping, LayerMapping};
