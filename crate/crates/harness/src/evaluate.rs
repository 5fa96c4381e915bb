use guidelab_analysis::PredictionSet;
use guidelab_tasks::{batch_indices, EvalAccumulator, EvalSummary, SplitName, TaskKind};
use guidelab_tensor::no_grad;
use guidelab_zoo::{Mode, NetworkState};

use crate::config::TaskLossKind;
use crate::data::TaskData;
use crate::error::{HarnessError, Result};
use crate::lossfn::task_loss;

/// Mean task loss and task metric over one split.
///
/// Runs in eval mode with gradients off and restores the network's previous
/// mode on the way out, so evaluating mid-training never perturbs it.
pub fn evaluate(
    net: &mut NetworkState<f32>,
    data: &TaskData,
    split: SplitName,
    batch_size: usize,
    loss_kind: TaskLossKind,
) -> Result<(f64, EvalSummary)> {
    with_eval_mode(net, |net| {
        evaluate_inner(net, data, split, batch_size, loss_kind, None)
    })
    .map(|(loss, summary, _)| (loss, summary))
}

/// Like `evaluate`, but also collects per-example predicted labels for the
/// single-label tasks (parity, images). Example ids are positions within the
/// split, which are stable for a fixed dataset seed.
pub fn evaluate_with_predictions(
    net: &mut NetworkState<f32>,
    data: &TaskData,
    split: SplitName,
    batch_size: usize,
    loss_kind: TaskLossKind,
) -> Result<(f64, EvalSummary, PredictionSet)> {
    match data.kind() {
        TaskKind::Parity | TaskKind::Images => {}
        other => {
            return Err(HarnessError::Config(format!(
                "per-example predictions need a single-label task, not {}",
                other.as_str()
            )))
        }
    }
    let mut rows: Vec<(u64, i64, i64)> = Vec::with_capacity(data.len(split));
    let (loss, summary, _) = with_eval_mode(net, |net| {
        evaluate_inner(net, data, split, batch_size, loss_kind, Some(&mut rows))
    })?;
    let ids: Vec<u64> = rows.iter().map(|r| r.0).collect();
    let predicted: Vec<i64> = rows.iter().map(|r| r.1).collect();
    let labels: Vec<i64> = rows.iter().map(|r| r.2).collect();
    let preds = PredictionSet::new(ids, predicted, labels)?;
    Ok((loss, summary, preds))
}

fn with_eval_mode<R>(
    net: &mut NetworkState<f32>,
    f: impl FnOnce(&NetworkState<f32>) -> Result<R>,
) -> Result<R> {
    let saved = net.mode();
    net.set_mode(Mode::Eval);
    let out = no_grad(|| f(net));
    net.set_mode(saved);
    out
}

fn evaluate_inner(
    net: &NetworkState<f32>,
    data: &TaskData,
    split: SplitName,
    batch_size: usize,
    loss_kind: TaskLossKind,
    mut predictions: Option<&mut Vec<(u64, i64, i64)>>,
) -> Result<(f64, EvalSummary, ())> {
    let n = data.len(split);
    if n == 0 {
        return Err(HarnessError::EmptySplit(split.as_str()));
    }
    let classes = data.classes();
    let mut acc = EvalAccumulator::new();
    let mut loss_sum = 0.0f64;
    let mut loss_weight = 0u64;
    for (bi, idx) in batch_indices(n, batch_size, false, None)?.iter().enumerate() {
        let prepared = data.make_batch(split, idx, bi as u64)?;
        let (logits, _) = net.forward_with_taps(&prepared.batch)?;
        let live = prepared.targets.iter().filter(|&&t| t >= 0).count() as u64;
        let loss = task_loss(loss_kind, &logits, &prepared.targets, classes)?;
        loss_sum += loss.to_vec()[0] as f64 * live as f64;
        loss_weight += live;
        let flat = logits.to_vec();
        match data.kind() {
            TaskKind::Images => {
                acc.update_classification(&flat, prepared.rows, classes, &prepared.targets)?
            }
            _ => acc.update_sequence(
                &flat,
                prepared.rows,
                prepared.positions,
                classes,
                &prepared.targets,
            )?,
        }
        if let Some(rows) = predictions.as_deref_mut() {
            collect_predictions(rows, idx, &flat, &prepared.targets, prepared.positions, classes);
        }
    }
    let summary = acc.summary(data.kind())?;
    Ok((loss_sum / loss_weight as f64, summary, ()))
}

/// Pull one (id, predicted, label) row per example. For parity the scored
/// position is the single live target; images have one row per example.
fn collect_predictions(
    rows: &mut Vec<(u64, i64, i64)>,
    idx: &[usize],
    flat: &[f32],
    targets: &[i64],
    positions: usize,
    classes: usize,
) {
    for (b, &example_id) in idx.iter().enumerate() {
        for t in 0..positions {
            let label = targets[b * positions + t];
            if label < 0 {
                continue;
            }
            let base = (b * positions + t) * classes;
            let row = &flat[base..base + classes];
            let mut best = 0usize;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            rows.push((example_id as u64, best as i64, label));
        }
    }
}
