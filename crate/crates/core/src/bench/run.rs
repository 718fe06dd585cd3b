use std::time::Instant;

use rayon::prelude::*;

use super::{enumerate_grid, score, BenchError, BenchGrid, Configuration, MetricSet};
use crate::gapfill::{fit_and_fill, FeatureContext, FeatureSetKind};
use crate::gapgen::{apply_mask, plan_for_series};
use crate::obs::{TimeSeries, VariableKind};
use crate::scalar::Scalar;

/// Station series plus the reanalysis series available to a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct DataContext<T> {
    pub stations: Vec<TimeSeries<T>>,
    pub reanalysis: Vec<TimeSeries<T>>,
}

impl<T: Scalar> DataContext<T> {
    pub fn new(stations: Vec<TimeSeries<T>>, reanalysis: Vec<TimeSeries<T>>) -> Self {
        Self { stations, reanalysis }
    }

    pub fn series(&self, site: &str, variable: &VariableKind) -> Option<&TimeSeries<T>> {
        self.stations
            .iter()
            .find(|s| s.station_id() == site && s.variable() == variable)
    }

    /// Every other station reporting `variable`.
    pub fn neighbors(&self, site: &str, variable: &VariableKind) -> Vec<TimeSeries<T>> {
        self.stations
            .iter()
            .filter(|s| s.station_id() != site && s.variable() == variable)
            .cloned()
            .collect()
    }

    pub fn reanalysis_for(&self, grid: &BenchGrid, site: &str, variable: &VariableKind) -> Option<&TimeSeries<T>> {
        let of_var = || self.reanalysis.iter().filter(|s| s.variable() == variable);
        match grid.reanalysis_cells.get(site) {
            Some(cell) => of_var().find(|s| s.station_id() == cell),
            None => {
                let mut it = of_var();
                let first = it.next();
                if it.next().is_some() {
                    None
                } else {
                    first
                }
            }
        }
    }
}

/// One scored fold of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub config: Configuration,
    pub fold: usize,
    pub metrics: MetricSet,
    /// Hidden slots that were filled and scored.
    pub n_points: usize,
    pub runtime_ms: Option<f64>,
    /// Per-configuration seed used for masking and fitting.
    pub seed: u64,
}

pub const RESULTS_HEADER: &str =
    "variable,feature_set,model,gap_size,site,fold,r2,rmse,nrmse,mae,n_points,runtime_ms,seed";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        let c = &self.config;
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.variable,
            c.feature_set_name(),
            c.model,
            c.gap_size,
            crate::obs::csv_field(&c.site),
            self.fold,
            opt(m.r2),
            opt(m.rmse),
            opt(m.nrmse),
            opt(m.mae),
            self.n_points,
            opt(self.runtime_ms),
            self.seed
        )
    }
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Mask, fit, fill and score every fold of one configuration.
pub fn run_configuration<T: Scalar>(
    grid: &BenchGrid,
    data: &DataContext<T>,
    config: &Configuration,
    master_seed: u64,
) -> Result<Vec<ResultRow>, BenchError> {
    let series = data
        .series(&config.site, &config.variable)
        .ok_or_else(|| BenchError::MissingData {
            site: config.site.clone(),
            variable: config.variable.to_string(),
        })?;
    let seed = config.seed(master_seed);
    let plan =
        plan_for_series(series, config.gap_size, grid.max_missing_frac, seed).map_err(|source| BenchError::GapGen {
            config: config.canonical(),
            source,
        })?;
    let neighbors = data.neighbors(&config.site, &config.variable);
    let ctx = FeatureContext::new(&neighbors, data.reanalysis_for(grid, &config.site, &config.variable));
    let feature_set = config.feature_set.unwrap_or(FeatureSetKind::Temporal);

    let mut rows = Vec::with_capacity(plan.fold_count());
    for fold in 0..plan.fold_count() {
        let (train, hidden) = apply_mask(series, &plan, fold).map_err(|source| BenchError::GapGen {
            config: config.canonical(),
            source,
        })?;
        let started = Instant::now();
        let (filled, _) =
            fit_and_fill(config.model, &train, &ctx, feature_set, &grid.params, seed).map_err(|source| {
                BenchError::GapFill {
                    config: config.canonical(),
                    source,
                }
            })?;
        let elapsed = started.elapsed().as_secs_f64() * 1e3;
        let (truth, pred): (Vec<T>, Vec<T>) = hidden
            .iter()
            .filter_map(|&(i, t)| filled.series.get(i).map(|p| (t, p)))
            .unzip();
        let metrics = if truth.is_empty() {
            MetricSet::default()
        } else {
            score(&truth, &pred)?
        };
        rows.push(ResultRow {
            config: config.clone(),
            fold,
            metrics,
            n_points: truth.len(),
            runtime_ms: grid.record_runtime.then_some(elapsed),
            seed,
        });
    }
    Ok(rows)
}

/// Run every configuration of `grid`. Configurations run in parallel; rows
/// come back in grid order, then fold order.
pub fn run_benchmark<T: Scalar>(
    grid: &BenchGrid,
    data: &DataContext<T>,
    master_seed: u64,
) -> Result<Vec<ResultRow>, BenchError> {
    let configs = enumerate_grid(grid)?;
    for c in &configs {
        if data.series(&c.site, &c.variable).is_none() {
            return Err(BenchError::MissingData {
                site: c.site.clone(),
                variable: c.variable.to_string(),
            });
        }
    }
    let per_config: Vec<Vec<ResultRow>> = configs
        .par_iter()
        .map(|c| run_configuration(grid, data, c, master_seed))
        .collect::<Result<_, _>>()?;
    Ok(per_config.into_iter().flatten().collect())
}
