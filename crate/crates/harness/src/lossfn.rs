use guidelab_tensor::Tensor;

use crate::config::TaskLossKind;
use crate::error::{HarnessError, Result};

/// Reduce network output to a scalar task loss.
///
/// `logits` is `(b, classes)` for image heads or `(b, T, classes)` for
/// sequence heads; `targets` holds one label per row (negative = ignored).
/// Every variant averages over the live targets only, so padded positions
/// never contribute.
pub fn task_loss(
    kind: TaskLossKind,
    logits: &Tensor<f32>,
    targets: &[i64],
    classes: usize,
) -> Result<Tensor<f32>> {
    let rows = logits.numel() / classes;
    if rows * classes != logits.numel() || targets.len() != rows {
        return Err(HarnessError::Config(format!(
            "loss shape mismatch: {} logits, {} classes, {} targets",
            logits.numel(),
            classes,
            targets.len()
        )));
    }
    let flat = logits.reshape(&[rows, classes])?;
    match kind {
        TaskLossKind::CrossEntropy => Ok(flat.softmax_cross_entropy(targets)?),
        TaskLossKind::Bce => {
            if classes != 2 {
                return Err(HarnessError::Config(format!(
                    "bce needs a 2-way head, got {classes} classes"
                )));
            }
            let live = live_rows(targets)?;
            // Two-logit head collapses to one margin logit z1 - z0; the
            // sigmoid of that margin is the class-1 softmax probability,
            // so BCE here matches cross-entropy up to parameterization.
            let pos: Vec<usize> = live.iter().map(|&r| r * 2 + 1).collect();
            let neg: Vec<usize> = live.iter().map(|&r| r * 2).collect();
            let margin = flat.gather_flat(&pos)?.sub(&flat.gather_flat(&neg)?)?;
            let y: Vec<f32> = live.iter().map(|&r| targets[r] as f32).collect();
            Ok(margin.bce_with_logits(&y)?)
        }
        TaskLossKind::Mse => {
            let live = live_rows(targets)?;
            let mut idx = Vec::with_capacity(live.len() * classes);
            let mut want = Vec::with_capacity(live.len() * classes);
            for &r in &live {
                for c in 0..classes {
                    idx.push(r * classes + c);
                    want.push(if targets[r] == c as i64 { 1.0 } else { 0.0 });
                }
            }
            let picked = flat.gather_flat(&idx)?;
            let target = Tensor::new(&[live.len() * classes], want)?;
            Ok(picked.mse_loss(&target)?)
        }
    }
}

fn live_rows(targets: &[i64]) -> Result<Vec<usize>> {
    let live: Vec<usize> = targets
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= 0)
        .map(|(i, _)| i)
        .collect();
    if live.is_empty() {
        return Err(HarnessError::Config(
            "batch has no live targets".into(),
        ));
    }
    Ok(live)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_margin_equals_two_way_cross_entropy() {
        let logits = Tensor::new(&[3, 2], vec![0.2f32, -0.4, 1.0, 0.9, -2.0, 0.5]).unwrap();
        let targets = vec![1i64, 0, 1];
        let ce = task_loss(TaskLossKind::CrossEntropy, &logits, &targets, 2).unwrap();
        let bce = task_loss(TaskLossKind::Bce, &logits, &targets, 2).unwrap();
        let (a, b) = (ce.to_vec()[0] as f64, bce.to_vec()[0] as f64);
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn mse_hits_zero_on_exact_one_hot_output() {
        let logits = Tensor::new(&[2, 3], vec![1.0f32, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let loss = task_loss(TaskLossKind::Mse, &logits, &[0, 2], 3).unwrap();
        assert_eq!(loss.to_vec()[0], 0.0);
    }

    #[test]
    fn ignored_rows_do_not_change_the_loss() {
        let small = Tensor::new(&[1, 3], vec![0.3f32, 0.1, -0.2]).unwrap();
        let big = Tensor::new(&[2, 3], vec![0.3f32, 0.1, -0.2, 9.0, -9.0, 4.0]).unwrap();
        let a = task_loss(TaskLossKind::CrossEntropy, &small, &[1], 3).unwrap();
        let b = task_loss(TaskLossKind::CrossEntropy, &big, &[1, -1], 3).unwrap();
        assert_eq!(a.to_vec(), b.to_vec());
        let am = task_loss(TaskLossKind::Mse, &small, &[1], 3).unwrap();
        let bm = task_loss(TaskLossKind::Mse, &big, &[1, -1], 3).unwrap();
        assert_eq!(am.to_vec(), bm.to_vec());
    }
}
