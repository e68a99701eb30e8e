//! Evaluation: TREC qrels and run files, trec_eval-compatible metrics, and
//! the (alpha, w) grid search.

pub mod grid;
pub mod metrics;
pub mod trec;

pub use grid::{grid_search, GridReport, GridRow, GridSpec};
pub use metrics::{evaluate, metrics, Gain, Metric, MetricReport};
pub use trec::{format_run, load_qrels, load_run, parse_qrels, parse_run, Qrels, RunFile, RunRecord};
