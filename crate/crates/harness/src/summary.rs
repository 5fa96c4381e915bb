use serde::{Deserialize, Serialize};

use guidelab_analysis::standard_error;

use crate::error::{HarnessError, Result};

/// Per-epoch training history for one seed. Train losses are means over the
/// epoch's steps; val and test numbers come from full-split evaluation at the
/// epoch boundary. Test numbers are kept here because model selection happens
/// after the fact, when only the last and best checkpoints still exist.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub seed: u64,
    pub epoch: u64,
    pub train_total: f64,
    pub train_task: f64,
    pub train_dissim: f64,
    pub val_loss: f64,
    pub val_metric: f64,
    pub test_loss: f64,
    pub test_metric: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedBest {
    pub seed: u64,
    pub best_epoch: u64,
    pub val_loss: f64,
}

/// A seed whose training aborted, with the diagnostic that killed it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub reason: String,
}

/// Cross-seed outcome of one experiment: the epoch with the lowest
/// seed-averaged validation loss and the test metric there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment_id: String,
    pub seeds: Vec<u64>,
    pub per_seed_best: Vec<SeedBest>,
    pub selected_epoch: u64,
    pub val_loss_at_selected: f64,
    pub test_metric_mean: f64,
    pub test_metric_se: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds_failed: Vec<FailedSeed>,
}

/// Pick the epoch minimizing the mean-over-seeds validation loss. Ties go to
/// the earliest epoch; every seed must report the same epoch sequence.
pub fn select_best_epoch(per_seed: &[Vec<EpochRecord>]) -> Result<Selection> {
    if per_seed.is_empty() || per_seed.iter().any(|r| r.is_empty()) {
        return Err(HarnessError::EmptySplit("epoch records"));
    }
    let epochs: Vec<u64> = per_seed[0].iter().map(|r| r.epoch).collect();
    for records in per_seed {
        let this: Vec<u64> = records.iter().map(|r| r.epoch).collect();
        if this != epochs {
            return Err(HarnessError::RaggedEpochs);
        }
    }
    let n_epochs = epochs.len();
    let mut best_idx = 0usize;
    let mut best_mean = f64::INFINITY;
    for e in 0..n_epochs {
        let mean = per_seed.iter().map(|r| r[e].val_loss).sum::<f64>() / per_seed.len() as f64;
        if mean < best_mean {
            best_mean = mean;
            best_idx = e;
        }
    }
    let per_seed_best = per_seed
        .iter()
        .map(|records| {
            let mut bi = 0usize;
            for (i, r) in records.iter().enumerate() {
                if r.val_loss < records[bi].val_loss {
                    bi = i;
                }
            }
            SeedBest {
                seed: records[bi].seed,
                best_epoch: records[bi].epoch,
                val_loss: records[bi].val_loss,
            }
        })
        .collect();
    let test_at_selected: Vec<f64> = per_seed.iter().map(|r| r[best_idx].test_metric).collect();
    let mean = test_at_selected.iter().sum::<f64>() / test_at_selected.len() as f64;
    Ok(Selection {
        per_seed_best,
        selected_epoch: epochs[best_idx],
        val_loss_at_selected: best_mean,
        test_metric_mean: mean,
        test_metric_se: standard_error(&test_at_selected),
    })
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub per_seed_best: Vec<SeedBest>,
    pub selected_epoch: u64,
    pub val_loss_at_selected: f64,
    pub test_metric_mean: f64,
    pub test_metric_se: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, epoch: u64, val: f64, test: f64) -> EpochRecord {
        EpochRecord {
            seed,
            epoch,
            train_total: 0.0,
            train_task: 0.0,
            train_dissim: 0.0,
            val_loss: val,
            val_metric: 0.0,
            test_loss: 0.0,
            test_metric: test,
            wall_ms: 0,
        }
    }

    #[test]
    fn argmin_over_seed_mean_val_loss() {
        // seed means per epoch: 2.0, 1.5, 1.8
        let s1 = vec![rec(1, 1, 2.5, 0.1), rec(1, 2, 1.0, 0.5), rec(1, 3, 1.6, 0.3)];
        let s2 = vec![rec(2, 1, 1.5, 0.2), rec(2, 2, 2.0, 0.7), rec(2, 3, 2.0, 0.4)];
        let sel = select_best_epoch(&[s1, s2]).unwrap();
        assert_eq!(sel.selected_epoch, 2);
        assert!((sel.val_loss_at_selected - 1.5).abs() < 1e-12);
        assert!((sel.test_metric_mean - 0.6).abs() < 1e-12);
        // sample std of {0.5, 0.7} is sqrt(0.02); SE divides by sqrt(2)
        assert!((sel.test_metric_se - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_seed_selection_is_that_seeds_best() {
        let s = vec![rec(7, 1, 3.0, 0.0), rec(7, 2, 1.0, 0.9), rec(7, 3, 2.0, 0.1)];
        let sel = select_best_epoch(&[s]).unwrap();
        assert_eq!(sel.selected_epoch, 2);
        assert_eq!(sel.per_seed_best[0].best_epoch, 2);
        assert_eq!(sel.test_metric_mean, 0.9);
        assert_eq!(sel.test_metric_se, 0.0);
    }

    #[test]
    fn val_tie_selects_the_earliest_epoch() {
        let s1 = vec![rec(1, 1, 1.0, 0.2), rec(1, 2, 3.0, 0.8)];
        let s2 = vec![rec(2, 1, 3.0, 0.3), rec(2, 2, 1.0, 0.9)];
        let sel = select_best_epoch(&[s1, s2]).unwrap();
        assert_eq!(sel.selected_epoch, 1);
    }

    #[test]
    fn ragged_epoch_sets_are_rejected() {
        let s1 = vec![rec(1, 1, 1.0, 0.0), rec(1, 2, 1.0, 0.0)];
        let s2 = vec![rec(2, 1, 1.0, 0.0)];
        assert!(matches!(
            select_best_epoch(&[s1, s2]),
            Err(HarnessError::RaggedEpochs)
        ));
    }
}
