//! Experiment orchestration: configs, datasets wired to networks, training
//! with an optional frozen guide, evaluation, checkpointing, learning-rate
//! sweeps, and the `guidelab` command line.
//!
//! Everything is deterministic at default settings: a (config, seed) pair
//! maps to byte-identical logs and checkpoints on reruns. Randomness comes
//! from per-purpose RNG streams (target init, guide init, batch shuffling,
//! noise inputs), so turning a guide on or off never shifts the target's
//! initialization or the batch order.

mod checkpointing;
mod cli;
mod config;
mod corpus;
mod data;
mod error;
mod evaluate;
mod logging;
mod lossfn;
mod run;
mod summary;
mod sweep;
mod train;

pub use checkpointing::{load_guide_checkpoint, load_net_checkpoint, save_net_checkpoint, CheckpointMeta};
pub use cli::{run, Cli, Command, RunArgs};
pub use config::{
    ExperimentConfig, OptimizerConfig, OptimizerKind, TaskConfig, TaskLossKind,
};
pub use corpus::synth_corpus;
pub use data::{PreparedBatch, TaskData};
pub use error::{HarnessError, Result};
pub use evaluate::{evaluate, evaluate_with_predictions};
pub use logging::{CsvLogger, LOG_HEADER};
pub use lossfn::task_loss;
pub use run::{prepare_guide, run_experiment, RunPaths};
pub use summary::{select_best_epoch, EpochRecord, FailedSeed, RunSummary, SeedBest, Selection};
pub use sweep::{lr_sweep, LrResult, SweepOutcome, DEFAULT_SWEEP_LRS};
pub use train::{
    train_seed, GuideSource, SeedOutcome, STREAM_GUIDE_INIT, STREAM_NOISE, STREAM_SHUFFLE,
    STREAM_TARGET_INIT,
};
