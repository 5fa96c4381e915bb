use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use guidelab_analysis::{
    emit_curves, error_consistency, extract_dissim_curves, extract_total_loss_curves,
    read_predictions, write_predictions, CurveFormat,
};
use guidelab_guidance::GuidanceConfig;
use guidelab_tasks::{save_images, save_parity, save_sequences, EvalSummary, SplitName};

use crate::checkpointing::load_net_checkpoint;
use crate::config::{ExperimentConfig, TaskConfig};
use crate::data::TaskData;
use crate::error::{HarnessError, Result};
use crate::evaluate::{evaluate, evaluate_with_predictions};
use crate::run::{run_experiment, RunPaths};
use crate::summary::RunSummary;
use crate::sweep::{lr_sweep, DEFAULT_SWEEP_LRS};

#[derive(Parser, Debug)]
#[command(
    name = "guidelab",
    version,
    about = "Train networks with and without a frozen guide and analyze the runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by the training subcommands. Values given here override the
/// corresponding config file fields.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// Experiment config file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for the log, checkpoints, and summary.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub experiment_id: Option<String>,
    /// Record real wall-clock times in the log (costs byte-identical reruns).
    #[arg(long)]
    pub record_timing: bool,
}

impl RunArgs {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(lr) = self.lr {
            cfg.lr = lr;
        }
        if let Some(epochs) = self.epochs {
            cfg.epochs = epochs;
        }
        if let Some(batch_size) = self.batch_size {
            cfg.batch_size = batch_size;
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if let Some(id) = &self.experiment_id {
            cfg.experiment_id = id.clone();
        }
        if self.record_timing {
            cfg.record_timing = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the config's dataset and write the splits to files.
    GenData {
        /// Experiment config, or a bare task config (the `task` object).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Baseline training; the config must have guidance off.
    Train(RunArgs),
    /// Train the config's guide architecture on the task without guidance,
    /// then promote the best checkpoint to out-dir/guide.glab.
    TrainGuide(RunArgs),
    /// Guided training; the config must have guidance on.
    Guide(RunArgs),
    /// Learning-rate sweep over shortened runs (a quarter of the epochs).
    SweepLr {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated rates; default 1e-4,3e-4,1e-3,3e-3,1e-2.
        #[arg(long, value_delimiter = ',')]
        lrs: Option<Vec<f64>>,
    },
    /// Evaluate a checkpoint on one split of the config's dataset.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// train, val, or test.
        #[arg(long, default_value = "test")]
        split: String,
        /// Also write per-example predictions (parity and images only).
        #[arg(long)]
        preds_out: Option<PathBuf>,
    },
    /// Error consistency between two prediction files.
    CompareErrors {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Write the report as JSON here as well as printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate per-step training curves from logs into CSV or SVG.
    Plot {
        #[arg(long, num_args = 1.., required = true)]
        logs: Vec<PathBuf>,
        /// csv or svg.
        #[arg(long, default_value = "csv")]
        format: String,
        /// dissim or total.
        #[arg(long, default_value = "dissim")]
        column: String,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { config, out_dir } => gen_data(&config, &out_dir),
        Command::Train(args) => {
            let cfg = args.load()?;
            if cfg.guidance.guide_mode.uses_guide() {
                return Err(HarnessError::Config(
                    "`train` is the unguided baseline; this config enables guidance, use `guide`"
                        .into(),
                ));
            }
            let summary = run_experiment(&cfg, &args.out_dir)?;
            print_summary(&summary, &args.out_dir);
            Ok(())
        }
        Command::Guide(args) => {
            let cfg = args.load()?;
            if !cfg.guidance.guide_mode.uses_guide() {
                return Err(HarnessError::Config(
                    "`guide` trains with guidance; this config has guide_mode none, use `train`"
                        .into(),
                ));
            }
            let summary = run_experiment(&cfg, &args.out_dir)?;
            print_summary(&summary, &args.out_dir);
            Ok(())
        }
        Command::TrainGuide(args) => train_guide(&args),
        Command::SweepLr { run, lrs } => {
            let cfg = run.load()?;
            let lrs = lrs.unwrap_or_else(|| DEFAULT_SWEEP_LRS.to_vec());
            let outcome = lr_sweep(&cfg, &lrs, &run.out_dir)?;
            println!(
                "chosen lr {} (val loss {:.6}); details in {}",
                outcome.chosen_lr,
                outcome.chosen_val_loss,
                run.out_dir.join("sweep.json").display()
            );
            Ok(())
        }
        Command::Eval {
            config,
            checkpoint,
            split,
            preds_out,
        } => eval_checkpoint(&config, &checkpoint, &split, preds_out.as_deref()),
        Command::CompareErrors { a, b, out } => compare_errors(&a, &b, out.as_deref()),
        Command::Plot {
            logs,
            format,
            column,
            out,
        } => plot(&logs, &format, &column, &out),
    }
}

/// Accept either a full experiment config or a bare task object, so dataset
/// generation does not require inventing a network spec.
fn read_task_config(path: &std::path::Path) -> Result<TaskConfig> {
    #[derive(Deserialize)]
    struct TaskField {
        task: TaskConfig,
    }
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::json(path, e))?;
    let task = if value.get("task").is_some() {
        serde_json::from_value::<TaskField>(value)
            .map_err(|e| HarnessError::json(path, e))?
            .task
    } else {
        serde_json::from_value::<TaskConfig>(value).map_err(|e| HarnessError::json(path, e))?
    };
    task.validate()?;
    Ok(task)
}

fn gen_data(config: &std::path::Path, out_dir: &std::path::Path) -> Result<()> {
    let task = read_task_config(config)?;
    let data = TaskData::load(&task)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    match &data {
        TaskData::Sequence { split, .. } => {
            save_sequences(out_dir.join("train.txt"), &split.train)?;
            save_sequences(out_dir.join("val.txt"), &split.val)?;
            save_sequences(out_dir.join("test.txt"), &split.test)?;
        }
        TaskData::Parity { split } => {
            save_parity(out_dir.join("train.txt"), &split.train)?;
            save_parity(out_dir.join("val.txt"), &split.val)?;
            save_parity(out_dir.join("test.txt"), &split.test)?;
        }
        TaskData::Images { split, .. } => {
            save_images(out_dir.join("train.gimg"), &split.train)?;
            save_images(out_dir.join("val.gimg"), &split.val)?;
            save_images(out_dir.join("test.gimg"), &split.test)?;
        }
    }
    let manifest_path = out_dir.join("manifest.txt");
    fs::write(&manifest_path, format!("{}\n", data.manifest()))
        .map_err(|e| HarnessError::io(&manifest_path, e))?;
    println!(
        "{}: {} train / {} val / {} test examples in {} (manifest {})",
        data.kind().as_str(),
        data.len(SplitName::Train),
        data.len(SplitName::Val),
        data.len(SplitName::Test),
        out_dir.display(),
        data.manifest()
    );
    Ok(())
}

fn train_guide(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let guide_spec = cfg.guide_spec.clone().ok_or_else(|| {
        HarnessError::Config("train-guide needs guide_spec in the config".into())
    })?;
    let mut gcfg = cfg.clone();
    gcfg.experiment_id = format!("{}-guide", cfg.experiment_id);
    gcfg.target_spec = guide_spec;
    gcfg.guidance = GuidanceConfig::none();
    gcfg.guide_spec = None;
    gcfg.guide_checkpoint = None;
    gcfg.validate()?;
    let summary = run_experiment(&gcfg, &args.out_dir)?;
    print_summary(&summary, &args.out_dir);
    let best = summary
        .per_seed_best
        .iter()
        .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
        .expect("summary has at least one completed seed");
    let src = RunPaths::new(&args.out_dir).best_checkpoint(best.seed);
    let dst = args.out_dir.join("guide.glab");
    fs::copy(&src, &dst).map_err(|e| HarnessError::io(&dst, e))?;
    println!(
        "guide checkpoint: {} (seed {}, epoch {}, val loss {:.6})",
        dst.display(),
        best.seed,
        best.best_epoch,
        best.val_loss
    );
    Ok(())
}

fn parse_split(s: &str) -> Result<SplitName> {
    match s {
        "train" => Ok(SplitName::Train),
        "val" => Ok(SplitName::Val),
        "test" => Ok(SplitName::Test),
        other => Err(HarnessError::Config(format!(
            "unknown split {other:?}; use train, val, or test"
        ))),
    }
}

fn eval_checkpoint(
    config: &std::path::Path,
    checkpoint: &std::path::Path,
    split: &str,
    preds_out: Option<&std::path::Path>,
) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let split = parse_split(split)?;
    let data = TaskData::load(&cfg.task)?;
    let (mut net, _, meta) = load_net_checkpoint(checkpoint)?;
    data.check_spec(&meta.spec, "checkpoint")?;
    if let Some(out) = preds_out {
        let (loss, summary, preds) =
            evaluate_with_predictions(&mut net, &data, split, cfg.batch_size, cfg.task_loss)?;
        write_predictions(out, &preds)?;
        println!(
            "{} {} loss {:.6} {}; predictions in {}",
            meta.experiment_id,
            split.as_str(),
            loss,
            metric_line(&summary),
            out.display()
        );
    } else {
        let (loss, summary) = evaluate(&mut net, &data, split, cfg.batch_size, cfg.task_loss)?;
        println!(
            "{} {} loss {:.6} {}",
            meta.experiment_id,
            split.as_str(),
            loss,
            metric_line(&summary)
        );
    }
    Ok(())
}

fn compare_errors(
    a: &std::path::Path,
    b: &std::path::Path,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let pa = read_predictions(a)?;
    let pb = read_predictions(b)?;
    let report = error_consistency(&pa, &pb)?;
    println!(
        "accuracies {:.4} / {:.4}; c_obs {:.4} c_exp {:.4} kappa {:.4}",
        pa.accuracy(),
        pb.accuracy(),
        report.c_obs,
        report.c_exp,
        report.kappa
    );
    if let Some(path) = out {
        let json = serde_json::json!({
            "accuracy_a": pa.accuracy(),
            "accuracy_b": pb.accuracy(),
            "c_obs": report.c_obs,
            "c_exp": report.c_exp,
            "kappa": report.kappa,
        });
        let text = serde_json::to_string_pretty(&json).map_err(|e| HarnessError::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(())
}

fn plot(logs: &[PathBuf], format: &str, column: &str, out: &std::path::Path) -> Result<()> {
    let format: CurveFormat = format
        .parse()
        .map_err(|e: String| HarnessError::Config(e))?;
    let series = match column {
        "dissim" => extract_dissim_curves(logs)?,
        "total" => extract_total_loss_curves(logs)?,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown column {other:?}; use dissim or total"
            )))
        }
    };
    emit_curves(&series, format, out)?;
    println!("{} series -> {}", series.len(), out.display());
    Ok(())
}

fn metric_line(summary: &EvalSummary) -> String {
    match *summary {
        EvalSummary::Classification {
            accuracy,
            top5_accuracy: Some(top5),
        } => format!("accuracy {accuracy:.4} top5 {top5:.4}"),
        EvalSummary::Classification {
            accuracy,
            top5_accuracy: None,
        } => format!("accuracy {accuracy:.4}"),
        EvalSummary::TokenSeq {
            token_accuracy,
            sequence_accuracy,
        } => format!("token_accuracy {token_accuracy:.4} sequence_accuracy {sequence_accuracy:.4}"),
        EvalSummary::LanguageModel {
            perplexity,
            mean_nll,
            token_accuracy,
        } => format!(
            "perplexity {perplexity:.4} mean_nll {mean_nll:.4} token_accuracy {token_accuracy:.4}"
        ),
    }
}

fn print_summary(summary: &RunSummary, out_dir: &std::path::Path) {
    println!(
        "{}: selected epoch {} (val loss {:.6}), test metric {:.6} +/- {:.6} over {} seed(s); {}",
        summary.experiment_id,
        summary.selected_epoch,
        summary.val_loss_at_selected,
        summary.test_metric_mean,
        summary.test_metric_se,
        summary.seeds.len(),
        out_dir.join("summary.json").display()
    );
    for failed in &summary.seeds_failed {
        eprintln!("seed {} failed: {}", failed.seed, failed.reason);
    }
}
