use std::collections::BTreeMap;

use serde::Deserialize;

use super::BenchError;
use crate::gapfill::{FeatureSetKind, ModelKind, ModelParams};
use crate::obs::VariableKind;
use crate::rng::{derive_seed, fnv1a64};

pub const DEFAULT_GAP_SIZES: [usize; 4] = [1, 4, 36, 288];
pub const BENCH_VARIABLES: [VariableKind; 4] = [VariableKind::Ta, VariableKind::Dp, VariableKind::Rh, VariableKind::Lw];

/// The five evaluation dimensions plus run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub variables: Vec<VariableKind>,
    pub feature_sets: Vec<FeatureSetKind>,
    pub models: Vec<ModelKind>,
    pub gap_sizes: Vec<usize>,
    pub sites: Vec<String>,
    pub max_missing_frac: f64,
    /// Wall-clock timings make output non-reproducible, so they are opt-in.
    pub record_runtime: bool,
    pub params: ModelParams,
    /// Reanalysis station id per site; sites not listed use the only
    /// reanalysis series of the variable, if there is exactly one.
    pub reanalysis_cells: BTreeMap<String, String>,
}

impl BenchGrid {
    pub fn new(
        variables: Vec<VariableKind>,
        feature_sets: Vec<FeatureSetKind>,
        models: Vec<ModelKind>,
        gap_sizes: Vec<usize>,
        sites: Vec<String>,
    ) -> Self {
        Self {
            variables,
            feature_sets,
            models,
            gap_sizes,
            sites,
            max_missing_frac: 0.2,
            record_runtime: false,
            params: ModelParams::default(),
            reanalysis_cells: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let dims = [
            ("variables", self.variables.is_empty()),
            ("feature_sets", self.feature_sets.is_empty()),
            ("models", self.models.is_empty()),
            ("gap_sizes", self.gap_sizes.is_empty()),
            ("sites", self.sites.is_empty()),
        ];
        if let Some((name, _)) = dims.iter().find(|d| d.1) {
            return Err(BenchError::EmptyDimension(name));
        }
        if let Some(v) = self.variables.iter().find(|v| !BENCH_VARIABLES.contains(v)) {
            return Err(BenchError::InvalidGrid(format!("variable {v} is not benchmarked")));
        }
        if self.gap_sizes.contains(&0) {
            return Err(BenchError::InvalidGrid("gap sizes must be positive".into()));
        }
        if !(self.max_missing_frac > 0.0 && self.max_missing_frac <= 1.0) {
            return Err(BenchError::InvalidGrid("max_missing_frac must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let raw: RawGrid = toml::from_str(text).map_err(|e| BenchError::InvalidGrid(e.to_string()))?;
        raw.into_grid()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    variables: Vec<String>,
    feature_sets: Vec<String>,
    models: Vec<String>,
    gap_sizes: Option<Vec<usize>>,
    sites: Vec<String>,
    max_missing_frac: Option<f64>,
    record_runtime: Option<bool>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    reanalysis_cells: BTreeMap<String, String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParams {
    ridge: Option<f64>,
    rf_trees: Option<usize>,
    rf_max_depth: Option<usize>,
    rf_min_leaf: Option<usize>,
    rf_mtry: Option<usize>,
    rf_bootstrap: Option<bool>,
    gbdt_rounds: Option<usize>,
    gbdt_learning_rate: Option<f64>,
    gbdt_max_leaves: Option<usize>,
    gbdt_bins: Option<usize>,
    gbdt_l2: Option<f64>,
    gbdt_min_leaf: Option<usize>,
}

impl RawParams {
    fn apply(self, p: &mut ModelParams) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        set(&mut p.ridge, self.ridge);
        set(&mut p.forest.n_trees, self.rf_trees);
        if self.rf_max_depth.is_some() {
            p.forest.max_depth = self.rf_max_depth;
        }
        set(&mut p.forest.min_leaf, self.rf_min_leaf);
        if self.rf_mtry.is_some() {
            p.forest.mtry = self.rf_mtry;
        }
        set(&mut p.forest.bootstrap, self.rf_bootstrap);
        set(&mut p.gbdt.rounds, self.gbdt_rounds);
        set(&mut p.gbdt.learning_rate, self.gbdt_learning_rate);
        set(&mut p.gbdt.max_leaves, self.gbdt_max_leaves);
        set(&mut p.gbdt.bins, self.gbdt_bins);
        set(&mut p.gbdt.l2, self.gbdt_l2);
        set(&mut p.gbdt.min_leaf, self.gbdt_min_leaf);
    }
}

impl RawGrid {
    fn into_grid(self) -> Result<BenchGrid, BenchError> {
        let bad = |e: String| BenchError::InvalidGrid(e);
        let variables = self
            .variables
            .iter()
            .map(|s| s.parse::<VariableKind>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_, _>>()?;
        let feature_sets = self
            .feature_sets
            .iter()
            .map(|s| s.parse::<FeatureSetKind>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_, _>>()?;
        let models = self
            .models
            .iter()
            .map(|s| s.parse::<ModelKind>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_, _>>()?;
        let mut grid = BenchGrid::new(
            variables,
            feature_sets,
            models,
            self.gap_sizes.unwrap_or_else(|| DEFAULT_GAP_SIZES.to_vec()),
            self.sites,
        );
        if let Some(f) = self.max_missing_frac {
            grid.max_missing_frac = f;
        }
        grid.record_runtime = self.record_runtime.unwrap_or(false);
        self.params.apply(&mut grid.params);
        grid.reanalysis_cells = self.reanalysis_cells;
        grid.validate()?;
        Ok(grid)
    }
}

/// One point of the grid. Baselines carry no feature set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub variable: VariableKind,
    pub feature_set: Option<FeatureSetKind>,
    pub model: ModelKind,
    pub gap_size: usize,
    pub site: String,
}

impl Configuration {
    pub fn feature_set_name(&self) -> &'static str {
        self.feature_set.map_or("NONE", FeatureSetKind::name)
    }

    /// `variable|feature_set|model|gap_size|site`.
    pub fn canonical(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}",
            self.variable,
            self.feature_set_name(),
            self.model,
            self.gap_size,
            self.site
        )
    }

    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(master, fnv1a64(&self.canonical()))
    }
}

fn dedup<T: PartialEq + Clone>(xs: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(xs.len());
    for x in xs {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

/// Configurations in variable ≻ feature set ≻ model ≻ gap ≻ site order. Within
/// each variable the baselines follow the ML models, once per (gap, site).
pub fn enumerate_grid(grid: &BenchGrid) -> Result<Vec<Configuration>, BenchError> {
    grid.validate()?;
    let (variables, feature_sets, models, gaps, sites) = (
        dedup(&grid.variables),
        dedup(&grid.feature_sets),
        dedup(&grid.models),
        dedup(&grid.gap_sizes),
        dedup(&grid.sites),
    );
    let (ml, baselines): (Vec<ModelKind>, Vec<ModelKind>) = models.iter().partition(|m| m.is_ml());
    let mut out = Vec::new();
    for variable in &variables {
        let mut push = |feature_set: Option<FeatureSetKind>, model: ModelKind| {
            for &gap_size in &gaps {
                for site in &sites {
                    out.push(Configuration {
                        variable: variable.clone(),
                        feature_set,
                        model,
                        gap_size,
                        site: site.clone(),
                    });
                }
            }
        };
        for &fs in &feature_sets {
            for &m in &ml {
                push(Some(fs), m);
            }
        }
        for &m in &baselines {
            push(None, m);
        }
    }
    Ok(out)
}
