use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{AnalysisError, Result};

/// Column layout of the training log CSV, in order.
pub const LOG_HEADER: [&str; 11] = [
    "experiment_id",
    "seed",
    "epoch",
    "step",
    "split",
    "total_loss",
    "task_loss",
    "dissim_loss",
    "metric",
    "lr",
    "wall_ms",
];

/// One aggregated curve: per step, the mean and standard error across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub name: String,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl CurveSeries {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Sample standard error: std with n-1 in the denominator over sqrt(n);
/// zero for a single observation.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Pull one named per-step column out of a log's train rows, aggregated
/// across seeds.
fn extract_column(path: &Path, column: usize) -> Result<CurveSeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AnalysisError::csv(path, e))?;
    let headers = reader.headers().map_err(|e| AnalysisError::csv(path, e))?;
    if headers != &LOG_HEADER[..] {
        return Err(AnalysisError::schema(
            path,
            format!("unexpected header {headers:?}"),
        ));
    }
    let mut name = None;
    let mut by_step: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut seeds_seen = std::collections::BTreeSet::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| AnalysisError::csv(path, e))?;
        if rec.len() != LOG_HEADER.len() {
            return Err(AnalysisError::schema(
                path,
                format!("row has {} fields", rec.len()),
            ));
        }
        if &rec[4] != "train" {
            continue;
        }
        name.get_or_insert_with(|| rec[0].to_string());
        let seed: u64 = rec[1]
            .parse()
            .map_err(|_| AnalysisError::schema(path, format!("bad seed {:?}", &rec[1])))?;
        let step: u64 = rec[3]
            .parse()
            .map_err(|_| AnalysisError::schema(path, format!("bad step {:?}", &rec[3])))?;
        let value: f64 = rec[column].parse().map_err(|_| {
            AnalysisError::schema(
                path,
                format!("bad {} value {:?}", LOG_HEADER[column], &rec[column]),
            )
        })?;
        seeds_seen.insert(seed);
        by_step.entry(step).or_default().push(value);
    }
    if by_step.is_empty() {
        return Err(AnalysisError::schema(path, "no train rows"));
    }
    let n_seeds = seeds_seen.len();
    let mut steps = Vec::with_capacity(by_step.len());
    let mut mean = Vec::with_capacity(by_step.len());
    let mut se = Vec::with_capacity(by_step.len());
    for (step, values) in by_step {
        if values.len() != n_seeds {
            return Err(AnalysisError::schema(
                path,
                format!(
                    "step {step} has {} values but {n_seeds} seeds; seeds must share a step grid",
                    values.len()
                ),
            ));
        }
        steps.push(step);
        mean.push(values.iter().sum::<f64>() / values.len() as f64);
        se.push(standard_error(&values));
    }
    Ok(CurveSeries {
        name: name.unwrap_or_default(),
        steps,
        mean,
        se,
    })
}

/// Seed-aggregated dissimilarity-loss trajectory of each log file.
pub fn extract_dissim_curves(paths: &[impl AsRef<Path>]) -> Result<Vec<CurveSeries>> {
    if paths.is_empty() {
        return Err(AnalysisError::Empty("log path list"));
    }
    paths
        .iter()
        .map(|p| extract_column(p.as_ref(), 7))
        .collect()
}

/// Same aggregation for the total training loss.
pub fn extract_total_loss_curves(paths: &[impl AsRef<Path>]) -> Result<Vec<CurveSeries>> {
    if paths.is_empty() {
        return Err(AnalysisError::Empty("log path list"));
    }
    paths
        .iter()
        .map(|p| extract_column(p.as_ref(), 5))
        .collect()
}
