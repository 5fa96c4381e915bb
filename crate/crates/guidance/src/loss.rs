use guidelab_metrics::{cka_dissimilarity, rsa_dissimilarity, NetworkTag};
use guidelab_tensor::{Element, Tensor};
use guidelab_zoo::ActivationRecord;

use crate::config::MetricKind;
use crate::error::{GuidanceError, Result};
use crate::flatten::flatten_activation;
use crate::mapping::LayerMapping;

/// Minimum batch size for the guidance term. Below this the metrics are
/// either undefined (rsa) or vacuous (cka is identically 1 at b=2).
pub const MIN_GUIDED_BATCH: usize = 3;

/// The guided loss split into its parts. All fields are scalar tensors on
/// the same graph as `total`, so any of them can be inspected or logged
/// without recomputation.
#[derive(Debug)]
pub struct GuidedLossBreakdown<T: Element> {
    pub task_loss: Tensor<T>,
    pub dissimilarity_total: Tensor<T>,
    /// One ((guide_index, target_index), dissimilarity) entry per mapped pair.
    pub per_layer: Vec<((usize, usize), Tensor<T>)>,
    pub total: Tensor<T>,
}

/// Combine the task loss with the layer-wise representational dissimilarity
/// between target and guide records: total = task + Σ dissim(target[iT],
/// guide[iG]) over the mapping, unweighted. Gradients flow through the task
/// loss and the target activations only; guide activations enter as
/// constants (they are detached here even if the caller recorded them).
/// With an empty mapping the task loss is returned untouched, so a
/// guidance-off run is bit-identical to plain training.
pub fn guided_loss<T: Element>(
    task_loss: &Tensor<T>,
    target_rec: &ActivationRecord<T>,
    guide_rec: &ActivationRecord<T>,
    mapping: &LayerMapping,
    metric: MetricKind,
    target_pad: Option<&[bool]>,
    guide_pad: Option<&[bool]>,
) -> Result<GuidedLossBreakdown<T>> {
    if task_loss.numel() != 1 {
        return Err(GuidanceError::NonScalarTaskLoss(task_loss.shape().to_vec()));
    }
    if mapping.is_empty() {
        return Ok(GuidedLossBreakdown {
            task_loss: task_loss.clone(),
            dissimilarity_total: Tensor::zeros(&[]),
            per_layer: Vec::new(),
            total: task_loss.clone(),
        });
    }
    if target_rec.len() != mapping.target_taps() {
        return Err(GuidanceError::RecordLength {
            side: "target",
            expect: mapping.target_taps(),
            got: target_rec.len(),
        });
    }
    if guide_rec.len() != mapping.guide_taps() {
        return Err(GuidanceError::RecordLength {
            side: "guide",
            expect: mapping.guide_taps(),
            got: guide_rec.len(),
        });
    }
    let mut per_layer = Vec::with_capacity(mapping.len());
    let mut dissim_total: Option<Tensor<T>> = None;
    for &(ig, it) in mapping.pairs() {
        let t_raw = target_rec.activation(it);
        let g_raw = guide_rec.activation(ig).detach();
        let b_t = t_raw.shape()[0];
        let b_g = g_raw.shape()[0];
        if b_t != b_g {
            return Err(GuidanceError::BatchMismatch {
                target: b_t,
                guide: b_g,
            });
        }
        if b_t < MIN_GUIDED_BATCH {
            return Err(GuidanceError::BatchTooSmall {
                min: MIN_GUIDED_BATCH,
                got: b_t,
            });
        }
        let t_mat = flatten_activation(t_raw, target_pad, &format!("target:{it}"), NetworkTag::Target)?;
        let g_mat = flatten_activation(&g_raw, guide_pad, &format!("guide:{ig}"), NetworkTag::Guide)?;
        let d = match metric {
            MetricKind::Cka => cka_dissimilarity(&t_mat, &g_mat)?,
            MetricKind::Rsa => rsa_dissimilarity(&t_mat, &g_mat)?,
        };
        dissim_total = Some(match dissim_total {
            Some(acc) => acc.add(&d)?,
            None => d.clone(),
        });
        per_layer.push(((ig, it), d));
    }
    let dissimilarity_total = dissim_total.expect("mapping is non-empty");
    let total = task_loss.add(&dissimilarity_total)?;
    Ok(GuidedLossBreakdown {
        task_loss: task_loss.clone(),
        dissimilarity_total,
        per_layer,
        total,
    })
}
