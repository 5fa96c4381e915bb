use std::path::Path;
use std::time::Instant;

use guidelab_guidance::{
    compute_layer_mapping, guide_batch, guide_forward, guided_loss, GuidanceError, LayerMapping,
    MetricError,
};
use guidelab_tasks::{batch_indices, SplitName};
use guidelab_tensor::{clip_grad_norm, zero_grads, Adam, RngState, TensorError};
use guidelab_zoo::{build_network, ActivationRecord, Mode, NetworkSpec, NetworkState, ZooError};

use crate::checkpointing::{save_net_checkpoint, CheckpointMeta};
use crate::config::ExperimentConfig;
use crate::data::TaskData;
use crate::error::{HarnessError, Result};
use crate::evaluate::evaluate;
use crate::logging::CsvLogger;
use crate::lossfn::task_loss;
use crate::summary::EpochRecord;

/// RNG stream ids, all derived from the training seed. Separate streams keep
/// the drawing order of one consumer independent of the others, so adding or
/// removing a guide never shifts target initialization or batch order.
pub const STREAM_TARGET_INIT: u64 = 1;
pub const STREAM_GUIDE_INIT: u64 = 2;
pub const STREAM_SHUFFLE: u64 = 3;
pub const STREAM_NOISE: u64 = 4;

/// Where the guide network comes from for a seed.
pub enum GuideSource<'a> {
    /// No guidance: training degenerates to the plain task loss.
    None,
    /// A trained guide loaded once and shared across seeds. The caller must
    /// have set its forward mode already (`prepare_guide` does); nothing in
    /// training mutates it.
    Shared(&'a NetworkState<f32>),
    /// An untrained guide freshly initialized per seed from this spec.
    Fresh(&'a NetworkSpec),
}

/// What one seed's training produced. `failure` is set when the seed aborted
/// on a non-finite loss or gradient; `records` then covers only the epochs
/// that completed.
pub struct SeedOutcome {
    pub seed: u64,
    pub records: Vec<EpochRecord>,
    pub failure: Option<String>,
}

pub fn train_seed(
    cfg: &ExperimentConfig,
    data: &TaskData,
    guide_source: &GuideSource,
    seed: u64,
    logger: &mut CsvLogger,
    ckpt_dir: &Path,
) -> Result<SeedOutcome> {
    let mut init_rng = RngState::with_stream(seed, STREAM_TARGET_INIT);
    let mut target = build_network::<f32>(&cfg.target_spec, &mut init_rng)?;
    let gmode = cfg.guidance.guide_mode;
    let fresh_guide;
    let guide: Option<&NetworkState<f32>> = match guide_source {
        GuideSource::None => None,
        GuideSource::Shared(g) => Some(*g),
        GuideSource::Fresh(spec) => {
            let mut guide_rng = RngState::with_stream(seed, STREAM_GUIDE_INIT);
            let mut built = build_network::<f32>(spec, &mut guide_rng)?;
            built.set_mode(gmode.forward_mode());
            fresh_guide = built;
            Some(&fresh_guide)
        }
    };
    let mapping = match guide {
        Some(g) => compute_layer_mapping(target.tap_list().len(), g.tap_list().len())?,
        None => LayerMapping::empty(),
    };
    let guide_vocab = guide.map(|g| g.spec().classes).unwrap_or(1);
    let mut adam = Adam::new(cfg.optimizer.to_adam(cfg.lr));
    let mut shuffle_rng = RngState::with_stream(seed, STREAM_SHUFFLE);
    let mut noise_rng = RngState::with_stream(seed, STREAM_NOISE);
    let n_train = data.len(SplitName::Train);
    let classes = data.classes();
    let mut records: Vec<EpochRecord> = Vec::with_capacity(cfg.epochs);
    let mut global_step: u64 = 0;
    let mut best_val = f64::INFINITY;

    let abort = |logger: &mut CsvLogger,
                 records: Vec<EpochRecord>,
                 epoch: u64,
                 step: u64,
                 what: String|
     -> Result<SeedOutcome> {
        logger.abort_row(seed, epoch, step)?;
        logger.flush()?;
        Ok(SeedOutcome {
            seed,
            records,
            failure: Some(what),
        })
    };

    for epoch in 1..=cfg.epochs as u64 {
        let epoch_start = Instant::now();
        // The partial tail batch is dropped: the guidance metrics are batch
        // size sensitive, and a shrunken final batch would skew them.
        let plan = batch_indices(n_train, cfg.batch_size, true, Some(&mut shuffle_rng))?;
        if plan.is_empty() {
            return Err(HarnessError::Config(format!(
                "train split ({n_train} examples) is smaller than one batch ({})",
                cfg.batch_size
            )));
        }
        let (mut sum_total, mut sum_task, mut sum_dissim) = (0.0f64, 0.0f64, 0.0f64);
        target.set_mode(Mode::Train);
        for idx in &plan {
            let step_start = Instant::now();
            let mut step = || -> Result<(f64, f64, f64)> {
                let prepared = data.make_batch(SplitName::Train, idx, global_step + 1)?;
                let (logits, target_rec) = target.forward_with_taps(&prepared.batch)?;
                let t_loss = task_loss(cfg.task_loss, &logits, &prepared.targets, classes)?;
                let breakdown = if cfg.guidance.active_at_step(global_step) {
                    let g = guide.expect("active guidance implies a guide");
                    let g_in = guide_batch(
                        &prepared.batch,
                        gmode.input_mode(),
                        guide_vocab,
                        &mut noise_rng,
                    )?;
                    let g_rec = guide_forward(g, &g_in)?;
                    guided_loss(
                        &t_loss,
                        &target_rec,
                        &g_rec,
                        &mapping,
                        cfg.guidance.metric,
                        prepared.batch.pad_mask(),
                        g_in.pad_mask(),
                    )?
                } else {
                    // Inactive guidance is the empty mapping; the breakdown's
                    // total is the task loss tensor itself.
                    guided_loss(
                        &t_loss,
                        &target_rec,
                        &ActivationRecord::new(prepared.batch.id, Vec::new()),
                        &LayerMapping::empty(),
                        cfg.guidance.metric,
                        None,
                        None,
                    )?
                };
                let total_v = breakdown.total.to_vec()[0] as f64;
                let task_v = breakdown.task_loss.to_vec()[0] as f64;
                let dissim_v = breakdown.dissimilarity_total.to_vec()[0] as f64;
                zero_grads(target.params());
                breakdown.total.backward()?;
                if let Some(max_norm) = cfg.grad_clip {
                    clip_grad_norm(target.params(), max_norm)?;
                }
                adam.step(target.params())?;
                Ok((total_v, task_v, dissim_v))
            };
            let (total_v, task_v, dissim_v) = match step() {
                Ok(values) => values,
                Err(e) => match divergence_diagnostic(&e) {
                    Some(what) => {
                        return abort(
                            logger,
                            records,
                            epoch,
                            global_step + 1,
                            format!("{what} at epoch {epoch} step {}", global_step + 1),
                        )
                    }
                    None => return Err(e),
                },
            };
            global_step += 1;
            sum_total += total_v;
            sum_task += task_v;
            sum_dissim += dissim_v;
            let wall = wall_ms(cfg, step_start);
            logger.train_step(seed, epoch, global_step, total_v, task_v, dissim_v, wall)?;
        }
        let steps = plan.len() as f64;
        let (val_loss, val_summary) =
            evaluate(&mut target, data, SplitName::Val, cfg.batch_size, cfg.task_loss)?;
        let (test_loss, test_summary) =
            evaluate(&mut target, data, SplitName::Test, cfg.batch_size, cfg.task_loss)?;
        logger.eval_row(
            seed,
            epoch,
            global_step,
            "val",
            val_loss,
            val_summary.headline(),
            0,
        )?;
        logger.eval_row(
            seed,
            epoch,
            global_step,
            "test",
            test_loss,
            test_summary.headline(),
            0,
        )?;
        records.push(EpochRecord {
            seed,
            epoch,
            train_total: sum_total / steps,
            train_task: sum_task / steps,
            train_dissim: sum_dissim / steps,
            val_loss,
            val_metric: val_summary.headline(),
            test_loss,
            test_metric: test_summary.headline(),
            wall_ms: wall_ms(cfg, epoch_start),
        });
        let meta = CheckpointMeta {
            experiment_id: cfg.experiment_id.clone(),
            seed,
            epoch,
            val_loss,
            spec: cfg.target_spec.clone(),
        };
        save_net_checkpoint(
            &ckpt_dir.join(format!("seed{seed}-last.glab")),
            &target,
            Some(&adam),
            &shuffle_rng,
            &meta,
        )?;
        if val_loss < best_val {
            best_val = val_loss;
            save_net_checkpoint(
                &ckpt_dir.join(format!("seed{seed}-best.glab")),
                &target,
                Some(&adam),
                &shuffle_rng,
                &meta,
            )?;
        }
    }
    logger.flush()?;
    Ok(SeedOutcome {
        seed,
        records,
        failure: None,
    })
}

fn wall_ms(cfg: &ExperimentConfig, start: Instant) -> u64 {
    if cfg.record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Divergence never reaches the loop as a NaN scalar: every tensor op checks
/// its output, so an overflow anywhere in the step surfaces as a non-finite
/// error nested somewhere in the crate stack. Dig it out so the seed can be
/// aborted instead of failing the whole experiment.
fn divergence_diagnostic(e: &HarnessError) -> Option<String> {
    let tensor_diag = |te: &TensorError| match te {
        TensorError::NonFinite { op } => Some(format!("non-finite value from {op}")),
        TensorError::NonFiniteGrad { name } => Some(format!("non-finite gradient in {name}")),
        _ => None,
    };
    match e {
        HarnessError::Tensor(te) => tensor_diag(te),
        HarnessError::Zoo(ZooError::Tensor(te)) => tensor_diag(te),
        HarnessError::Guidance(ge) => match ge {
            GuidanceError::Tensor(te) => tensor_diag(te),
            GuidanceError::Metric(MetricError::Tensor(te)) => tensor_diag(te),
            GuidanceError::Zoo(ZooError::Tensor(te)) => tensor_diag(te),
            _ => None,
        },
        _ => None,
    }
}
