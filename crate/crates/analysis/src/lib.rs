//! Post-hoc analysis of training runs.
//!
//! Three pieces: error consistency (chance-corrected agreement of two
//! classifiers' per-example correctness patterns), extraction of per-step
//! loss curves from the training log CSVs with seed means and standard
//! errors, and emission of those curves as CSV or standalone SVG plots.

mod consistency;
mod curves;
mod emit;
mod error;

pub use consistency::{
    error_consistency, read_predictions, write_predictions, ErrorConsistencyReport, PredictionSet,
};
pub use curves::{
    extract_dissim_curves, extract_total_loss_curves, standard_error, CurveSeries, LOG_HEADER,
};
pub use emit::{emit_curves, read_curves_csv, CurveFormat};
pub use error::{AnalysisError, Result};
