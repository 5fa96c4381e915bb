use std::path::{Path, PathBuf};

use guidelab_guidance::GuidanceConfig;
use guidelab_tasks::{SynthImageSpec, TaskKind};
use guidelab_tensor::AdamConfig;
use guidelab_zoo::NetworkSpec;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Which dataset an experiment trains on, with its generation parameters.
/// `data_seed` drives dataset generation and splitting and is independent of
/// the training seeds, so all seeds of a run share one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    CopyPaste {
        #[serde(default = "default_seq_n")]
        n: usize,
        #[serde(default = "default_copy_len_range")]
        len_range: (usize, usize),
        #[serde(default = "default_copy_vocab")]
        vocab_size: usize,
        #[serde(default)]
        data_seed: u64,
    },
    Parity {
        #[serde(default = "default_seq_n")]
        n: usize,
        #[serde(default = "default_parity_len_range")]
        len_range: (usize, usize),
        #[serde(default)]
        data_seed: u64,
    },
    LanguageModel {
        corpus: PathBuf,
        #[serde(default = "default_context_len")]
        context_len: usize,
        #[serde(default)]
        data_seed: u64,
    },
    Images {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synth: Option<SynthImageSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default)]
        data_seed: u64,
    },
}

fn default_seq_n() -> usize {
    20_000
}

fn default_copy_len_range() -> (usize, usize) {
    (20, 40)
}

fn default_copy_vocab() -> usize {
    10
}

fn default_parity_len_range() -> (usize, usize) {
    (2, 50)
}

fn default_context_len() -> usize {
    guidelab_tasks::DEFAULT_CONTEXT_LEN
}

impl TaskConfig {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskConfig::CopyPaste { .. } => TaskKind::CopyPaste,
            TaskConfig::Parity { .. } => TaskKind::Parity,
            TaskConfig::LanguageModel { .. } => TaskKind::LanguageModel,
            TaskConfig::Images { .. } => TaskKind::Images,
        }
    }

    pub fn data_seed(&self) -> u64 {
        match *self {
            TaskConfig::CopyPaste { data_seed, .. }
            | TaskConfig::Parity { data_seed, .. }
            | TaskConfig::LanguageModel { data_seed, .. }
            | TaskConfig::Images { data_seed, .. } => data_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TaskConfig::Images { synth, path, .. } => {
                if synth.is_some() == path.is_some() {
                    return Err(HarnessError::Config(
                        "images task needs exactly one of `synth` or `path`".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Adamw,
}

/// Optimizer selection plus hyperparameters; `weight_decay` is decoupled for
/// adamw and folded into the gradient for adam.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            weight_decay: 0.0,
        }
    }
}

impl OptimizerConfig {
    pub fn to_adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
            decoupled: self.kind == OptimizerKind::Adamw,
        }
    }
}

/// Loss applied to the network head. Cross-entropy covers every task;
/// bce needs a two-class head (it scores the class-1 vs class-0 logit gap)
/// and mse regresses logits onto one-hot targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskLossKind {
    CrossEntropy,
    Bce,
    Mse,
}

impl Default for TaskLossKind {
    fn default() -> Self {
        TaskLossKind::CrossEntropy
    }
}

/// A full experiment: dataset, target network, optional guide, optimization
/// settings, and the seed list. Config files use exactly these keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub task: TaskConfig,
    pub target_spec: NetworkSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guide_spec: Option<NetworkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guide_checkpoint: Option<PathBuf>,
    #[serde(default = "GuidanceConfig::none")]
    pub guidance: GuidanceConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub lr: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_clip: Option<f64>,
    #[serde(default)]
    pub task_loss: TaskLossKind,
    /// Off by default so logs and checkpoints are byte-stable across reruns;
    /// switch on to record real wall-clock times in the wall_ms column.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_batch_size() -> usize {
    64
}

fn default_epochs() -> usize {
    30
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| HarnessError::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment_id.is_empty()
            || !self
                .experiment_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(HarnessError::Config(
                "experiment_id must be non-empty and use only [A-Za-z0-9_-]".into(),
            ));
        }
        self.task.validate()?;
        self.target_spec.validate()?;
        if let Some(spec) = &self.guide_spec {
            spec.validate()?;
        }
        self.guidance.validate()?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HarnessError::Config(format!(
                "lr must be positive and finite, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(HarnessError::Config(
                "batch_size and epochs must be positive".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must be non-empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        if let Some(clip) = self.grad_clip {
            if !(clip > 0.0 && clip.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "grad_clip must be positive and finite, got {clip}"
                )));
            }
        }

        let mode = self.guidance.guide_mode;
        if mode.uses_guide() {
            if mode.needs_checkpoint() && self.guide_checkpoint.is_none() {
                return Err(HarnessError::Config(format!(
                    "guide_mode {:?} needs a guide_checkpoint",
                    mode
                )));
            }
            if !mode.needs_checkpoint() {
                if self.guide_spec.is_none() {
                    return Err(HarnessError::Config(
                        "an untrained guide needs guide_spec".into(),
                    ));
                }
                if self.guide_checkpoint.is_some() {
                    return Err(HarnessError::Config(
                        "an untrained guide is freshly initialized; drop guide_checkpoint".into(),
                    ));
                }
            }
        } else if self.guide_spec.is_some() || self.guide_checkpoint.is_some() {
            return Err(HarnessError::Config(
                "guide_spec/guide_checkpoint are only allowed when guidance is on".into(),
            ));
        }

        if self.task_loss == TaskLossKind::Bce && self.target_spec.classes != 2 {
            return Err(HarnessError::Config(format!(
                "bce needs a two-class head, target has {} classes",
                self.target_spec.classes
            )));
        }
        Ok(())
    }
}
