use std::fs;
use std::path::{Path, PathBuf};

use guidelab_zoo::NetworkState;

use crate::checkpointing::load_guide_checkpoint;
use crate::config::ExperimentConfig;
use crate::data::TaskData;
use crate::error::{HarnessError, Result};
use crate::logging::CsvLogger;
use crate::summary::{select_best_epoch, FailedSeed, RunSummary};
use crate::train::{train_seed, GuideSource, SeedOutcome};

/// Paths produced by a run, rooted at the out directory.
pub struct RunPaths {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub log: PathBuf,
    pub checkpoints: PathBuf,
    pub summary: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        RunPaths {
            dir: dir.to_path_buf(),
            config: dir.join("config.json"),
            log: dir.join("log.csv"),
            checkpoints: dir.join("checkpoints"),
            summary: dir.join("summary.json"),
        }
    }

    pub fn best_checkpoint(&self, seed: u64) -> PathBuf {
        self.checkpoints.join(format!("seed{seed}-best.glab"))
    }

    pub fn last_checkpoint(&self, seed: u64) -> PathBuf {
        self.checkpoints.join(format!("seed{seed}-last.glab"))
    }
}

/// Resolve and sanity-check the guide for a config, loading the checkpoint
/// when one is named.
pub fn prepare_guide(
    cfg: &ExperimentConfig,
    data: &TaskData,
) -> Result<Option<NetworkState<f32>>> {
    let mode = cfg.guidance.guide_mode;
    if !mode.uses_guide() {
        return Ok(None);
    }
    if mode.needs_checkpoint() {
        let path = cfg
            .guide_checkpoint
            .as_ref()
            .expect("validated: checkpoint present");
        let mut guide = load_guide_checkpoint(path, cfg.guide_spec.as_ref())?;
        data.check_guide_spec(guide.spec())?;
        guide.set_mode(mode.forward_mode());
        Ok(Some(guide))
    } else {
        let spec = cfg.guide_spec.as_ref().expect("validated: spec present");
        data.check_guide_spec(spec)?;
        // The per-seed fresh initialization happens inside train_seed.
        Ok(None)
    }
}

/// Run every seed of one experiment and summarize.
///
/// Writes into `out_dir`: a config echo, the CSV log, per-seed checkpoints
/// (last + best), and the summary. Seeds run sequentially in listed order so
/// the log is deterministic.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let data = TaskData::load(&cfg.task)?;
    data.check_spec(&cfg.target_spec, "target_spec")?;
    let loaded_guide = prepare_guide(cfg, &data)?;
    let source = match (&loaded_guide, cfg.guidance.guide_mode.uses_guide()) {
        (Some(g), _) => GuideSource::Shared(g),
        (None, true) => GuideSource::Fresh(cfg.guide_spec.as_ref().expect("validated")),
        (None, false) => GuideSource::None,
    };

    let paths = RunPaths::new(out_dir);
    fs::create_dir_all(&paths.checkpoints).map_err(|e| HarnessError::io(&paths.checkpoints, e))?;
    let echo = serde_json::to_string_pretty(cfg).map_err(|e| HarnessError::json(&paths.config, e))?;
    fs::write(&paths.config, echo + "\n").map_err(|e| HarnessError::io(&paths.config, e))?;

    let mut logger = CsvLogger::create(&paths.log, &cfg.experiment_id, cfg.lr)?;
    let mut outcomes: Vec<SeedOutcome> = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        outcomes.push(train_seed(cfg, &data, &source, seed, &mut logger, &paths.checkpoints)?);
    }
    logger.flush()?;

    let summary = summarize(&cfg.experiment_id, &outcomes)?;
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| HarnessError::json(&paths.summary, e))?;
    fs::write(&paths.summary, text + "\n").map_err(|e| HarnessError::io(&paths.summary, e))?;
    Ok(summary)
}

fn summarize(experiment_id: &str, outcomes: &[SeedOutcome]) -> Result<RunSummary> {
    let seeds_failed: Vec<FailedSeed> = outcomes
        .iter()
        .filter_map(|o| {
            o.failure.as_ref().map(|reason| FailedSeed {
                seed: o.seed,
                reason: reason.clone(),
            })
        })
        .collect();
    let completed: Vec<&SeedOutcome> = outcomes.iter().filter(|o| o.failure.is_none()).collect();
    if completed.is_empty() {
        return Err(HarnessError::AllSeedsFailed);
    }
    let records: Vec<_> = completed.iter().map(|o| o.records.clone()).collect();
    let sel = select_best_epoch(&records)?;
    Ok(RunSummary {
        experiment_id: experiment_id.to_string(),
        seeds: completed.iter().map(|o| o.seed).collect(),
        per_seed_best: sel.per_seed_best,
        selected_epoch: sel.selected_epoch,
        val_loss_at_selected: sel.val_loss_at_selected,
        test_metric_mean: sel.test_metric_mean,
        test_metric_se: sel.test_metric_se,
        seeds_failed,
    })
}
