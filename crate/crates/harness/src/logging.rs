use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Column order of the experiment log. Kept in lockstep with the analysis
/// reader; changing it breaks every downstream curve extraction.
pub const LOG_HEADER: &str =
    "experiment_id,seed,epoch,step,split,total_loss,task_loss,dissim_loss,metric,lr,wall_ms";

/// Append-only CSV writer for one experiment.
///
/// All seeds of an experiment share one file; rows are written in seed order
/// so reruns of the same config produce byte-identical logs.
pub struct CsvLogger {
    out: BufWriter<File>,
    experiment_id: String,
    lr: f64,
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        // Shortest round-trip decimal; always '.' as the separator.
        format!("{v}")
    }
}

impl CsvLogger {
    pub fn create(path: &Path, experiment_id: &str, lr: f64) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut logger = CsvLogger {
            out: BufWriter::new(file),
            experiment_id: experiment_id.to_string(),
            lr,
        };
        logger.line(LOG_HEADER)?;
        Ok(logger)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| HarnessError::Config(format!("log write: {e}")))
    }

    fn row(
        &mut self,
        seed: u64,
        epoch: u64,
        step: u64,
        split: &str,
        total: f64,
        task: f64,
        dissim: f64,
        metric: Option<f64>,
        wall_ms: u64,
    ) -> Result<()> {
        let metric = metric.map(fmt_f64).unwrap_or_default();
        let id = self.experiment_id.clone();
        let lr = fmt_f64(self.lr);
        self.line(&format!(
            "{id},{seed},{epoch},{step},{split},{},{},{},{metric},{lr},{wall_ms}",
            fmt_f64(total),
            fmt_f64(task),
            fmt_f64(dissim),
        ))
    }

    /// One row per optimizer step; `step` is global and 1-based within a seed.
    #[allow(clippy::too_many_arguments)]
    pub fn train_step(
        &mut self,
        seed: u64,
        epoch: u64,
        step: u64,
        total: f64,
        task: f64,
        dissim: f64,
        wall_ms: u64,
    ) -> Result<()> {
        self.row(seed, epoch, step, "train", total, task, dissim, None, wall_ms)
    }

    /// One row per epoch per held-out split; loss is the task loss alone.
    #[allow(clippy::too_many_arguments)]
    pub fn eval_row(
        &mut self,
        seed: u64,
        epoch: u64,
        step: u64,
        split: &str,
        loss: f64,
        metric: f64,
        wall_ms: u64,
    ) -> Result<()> {
        self.row(seed, epoch, step, split, loss, loss, 0.0, Some(metric), wall_ms)
    }

    /// Terminal diagnostic row for a seed whose training hit a non-finite
    /// loss; the NaN fields make the failure visible in the raw log.
    pub fn abort_row(&mut self, seed: u64, epoch: u64, step: u64) -> Result<()> {
        self.row(
            seed,
            epoch,
            step,
            "abort",
            f64::NAN,
            f64::NAN,
            f64::NAN,
            None,
            0,
        )
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| HarnessError::Config(format!("log flush: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_the_analysis_reader() {
        let expected = guidelab_analysis::LOG_HEADER.join(",");
        assert_eq!(LOG_HEADER, expected);
    }

    #[test]
    fn rows_use_plain_decimal_notation() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-8), "0.00000001");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }
}
