//! Evaluation harness: grid enumeration, masked cross-validation runs, error
//! metrics and aggregation.

mod aggregate;
mod grid;
mod metrics;
mod run;

use thiserror::Error;

use crate::gapfill::GapFillError;
use crate::gapgen::GapGenError;

pub use aggregate::{aggregate, AggregateRow, AggregateTable, Dimension, Statistic};
pub use grid::{enumerate_grid, BenchGrid, Configuration, BENCH_VARIABLES, DEFAULT_GAP_SIZES};
pub use metrics::{score, spearman, Metric, MetricSet, NRMSE_MIN_RANGE};
pub use run::{results_csv, run_benchmark, run_configuration, DataContext, ResultRow, RESULTS_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("truth has {truth} values but prediction has {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("nothing to score")]
    Empty,
    #[error("grid dimension `{0}` is empty")]
    EmptyDimension(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no {variable} series for site {site}")]
    MissingData { site: String, variable: String },
    #[error("{config}: {source}")]
    GapGen { config: String, source: GapGenError },
    #[error("{config}: {source}")]
    GapFill { config: String, source: GapFillError },
}
