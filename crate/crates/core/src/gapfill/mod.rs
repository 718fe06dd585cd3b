//! Model-based gap filling: feature construction, regressors, baselines and
//! reanalysis debiasing.

mod debias;
mod features;
mod fill;
mod forest;
mod gbdt;
mod ols;
mod tree;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use debias::{fit_debias, DebiasTable, DEFAULT_MIN_SAMPLES};
pub use features::{
    build_features, build_query_features, column_names, neighbor_column, temporal_features, DesignMatrix,
    FeatureContext, FeatureRows, REANALYSIS_COLUMN, TEMPORAL_COLUMNS,
};
pub use fill::{
    fill_by_interpolation, fill_by_rbf, fill_gaps, fit_and_fill, fit_with_fallbacks, FillRecord, FillResult, FillSource,
};
pub use forest::{ForestParams, RandomForest};
pub use gbdt::{BoostedTree, Gbdt, GbdtParams};
pub use ols::OlsModel;
pub use tree::{RegressionTree, TreeParams};

use crate::interp::InterpError;
use crate::obs::format_timestamp;
use crate::scalar::Scalar;

/// Minimum training rows for tree ensembles.
pub const MIN_TREE_ROWS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapFillError {
    #[error("feature set requires a reanalysis series")]
    MissingReanalysis,
    #[error("series {0} is not on the target's time grid")]
    StepMismatch(String),
    #[error("normal equations are singular")]
    SingularNormalEquations,
    #[error("too few training rows: need {need}, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("feature columns {got:?} do not match fitted columns {expected:?}")]
    SchemaMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("observation and reanalysis series share no observed slot")]
    NoOverlap,
    #[error("{0} does not predict from feature rows")]
    NotFeatureModel(ModelKind),
    #[error("unknown feature set {0:?}")]
    UnknownFeatureSet(String),
    #[error("unknown model kind {0:?}")]
    UnknownModel(String),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureSetKind {
    Temporal,
    TemporalNeighbors,
    TemporalReanalysis,
    All,
}

impl FeatureSetKind {
    pub const ALL_KINDS: [FeatureSetKind; 4] = [
        FeatureSetKind::Temporal,
        FeatureSetKind::TemporalNeighbors,
        FeatureSetKind::TemporalReanalysis,
        FeatureSetKind::All,
    ];

    pub fn uses_neighbors(self) -> bool {
        matches!(self, FeatureSetKind::TemporalNeighbors | FeatureSetKind::All)
    }

    pub fn uses_reanalysis(self) -> bool {
        matches!(self, FeatureSetKind::TemporalReanalysis | FeatureSetKind::All)
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSetKind::Temporal => "TEMPORAL",
            FeatureSetKind::TemporalNeighbors => "TEMPORAL_NEIGHBORS",
            FeatureSetKind::TemporalReanalysis => "TEMPORAL_REANALYSIS",
            FeatureSetKind::All => "ALL",
        }
    }

    /// Sets tried at fill time when this one cannot be built for a slot.
    pub fn fallbacks(self) -> Vec<FeatureSetKind> {
        let mut out = vec![self];
        if self.uses_neighbors() && self.uses_reanalysis() {
            out.push(FeatureSetKind::TemporalReanalysis);
        }
        if self != FeatureSetKind::Temporal {
            out.push(FeatureSetKind::Temporal);
        }
        out
    }
}

impl fmt::Display for FeatureSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSetKind {
    type Err = GapFillError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL_KINDS
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| GapFillError::UnknownFeatureSet(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Ols,
    RandomForest,
    Gbdt,
    BaselineLinearInterp,
    BaselineDebias,
}

impl ModelKind {
    pub const ML: [ModelKind; 3] = [ModelKind::Ols, ModelKind::RandomForest, ModelKind::Gbdt];
    pub const BASELINES: [ModelKind; 2] = [ModelKind::BaselineLinearInterp, ModelKind::BaselineDebias];

    pub fn is_ml(self) -> bool {
        Self::ML.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ols => "OLS",
            ModelKind::RandomForest => "RANDOM_FOREST",
            ModelKind::Gbdt => "GBDT",
            ModelKind::BaselineLinearInterp => "BASELINE_LINEAR_INTERP",
            ModelKind::BaselineDebias => "BASELINE_DEBIAS",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = GapFillError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ML
            .into_iter()
            .chain(Self::BASELINES)
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| GapFillError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub ridge: f64,
    pub forest: ForestParams,
    pub gbdt: GbdtParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            ridge: 1e-8,
            forest: ForestParams::default(),
            gbdt: GbdtParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fitted<T> {
    Ols(OlsModel<T>),
    Forest(RandomForest<T>),
    Gbdt(Gbdt<T>),
    Debias(DebiasTable<T>),
    LinearInterp,
}

/// Where a model's training data came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub n_rows: usize,
    /// Smallest and largest series index used in training.
    pub train_index_range: Option<(usize, usize)>,
    /// Timestamp of the last training row; stands in for a wall-clock fit time
    /// so that models stay reproducible.
    pub trained_through: Option<DateTime<Utc>>,
}

impl Provenance {
    fn of_rows<T>(rows: &FeatureRows<T>) -> Self {
        Self {
            n_rows: rows.len(),
            train_index_range: rows
                .indices
                .iter()
                .min()
                .zip(rows.indices.iter().max())
                .map(|(a, b)| (*a, *b)),
            trained_through: rows.timestamps.iter().max().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFillModel<T> {
    kind: ModelKind,
    feature_set: Option<FeatureSetKind>,
    column_names: Vec<String>,
    seed: u64,
    fitted: Fitted<T>,
    provenance: Provenance,
}

impl<T: Scalar> GapFillModel<T> {
    /// Fit one of the ML regressors. Baselines are built with
    /// [`GapFillModel::linear_interp`] and [`GapFillModel::debias`].
    pub fn fit(
        kind: ModelKind,
        x: &DesignMatrix<T>,
        feature_set: Option<FeatureSetKind>,
        params: &ModelParams,
        seed: u64,
    ) -> Result<Self, GapFillError> {
        let rows = &x.features.rows;
        let fitted = match kind {
            ModelKind::Ols => Fitted::Ols(OlsModel::fit(rows, &x.target, T::lit(params.ridge))?),
            ModelKind::RandomForest | ModelKind::Gbdt => {
                if rows.len() < MIN_TREE_ROWS {
                    return Err(GapFillError::TooFewRows {
                        need: MIN_TREE_ROWS,
                        got: rows.len(),
                    });
                }
                if kind == ModelKind::RandomForest {
                    Fitted::Forest(RandomForest::fit(rows, &x.target, params.forest, seed))
                } else {
                    Fitted::Gbdt(Gbdt::fit(rows, &x.target, params.gbdt))
                }
            }
            other => return Err(GapFillError::NotFeatureModel(other)),
        };
        Ok(Self {
            kind,
            feature_set,
            column_names: x.features.column_names.clone(),
            seed,
            fitted,
            provenance: Provenance::of_rows(&x.features),
        })
    }

    pub fn linear_interp() -> Self {
        Self {
            kind: ModelKind::BaselineLinearInterp,
            feature_set: None,
            column_names: Vec::new(),
            seed: 0,
            fitted: Fitted::LinearInterp,
            provenance: Provenance::default(),
        }
    }

    /// Wrap a debias table; `obs` is the series it was fitted on.
    pub fn debias(table: DebiasTable<T>, obs: &crate::obs::TimeSeries<T>) -> Self {
        let observed: Vec<usize> = (0..obs.len()).filter(|&i| !obs.is_missing(i)).collect();
        Self {
            kind: ModelKind::BaselineDebias,
            feature_set: None,
            column_names: vec![REANALYSIS_COLUMN.to_string()],
            seed: 0,
            fitted: Fitted::Debias(table),
            provenance: Provenance {
                n_rows: observed.len(),
                train_index_range: observed.first().zip(observed.last()).map(|(a, b)| (*a, *b)),
                trained_through: observed.last().map(|&i| obs.timestamp(i)),
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn feature_set(&self) -> Option<FeatureSetKind> {
        self.feature_set
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fitted(&self) -> &Fitted<T> {
        &self.fitted
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn predict_row(&self, row: &[T]) -> Result<T, GapFillError> {
        Ok(match &self.fitted {
            Fitted::Ols(m) => m.predict_row(row),
            Fitted::Forest(m) => m.predict_row(row),
            Fitted::Gbdt(m) => m.predict_row(row),
            Fitted::Debias(_) | Fitted::LinearInterp => return Err(GapFillError::NotFeatureModel(self.kind)),
        })
    }

    pub fn predict(&self, x: &FeatureRows<T>) -> Result<Vec<T>, GapFillError> {
        if x.column_names != self.column_names {
            return Err(GapFillError::SchemaMismatch {
                expected: self.column_names.clone(),
                got: x.column_names.clone(),
            });
        }
        x.rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Plain-text `key=value` description of the model and its training data.
    pub fn provenance_manifest(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind={}\n", self.kind));
        out.push_str(&format!(
            "feature_set={}\n",
            self.feature_set.map_or("NONE", FeatureSetKind::name)
        ));
        out.push_str(&format!("columns={}\n", self.column_names.join(",")));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("train_rows={}\n", self.provenance.n_rows));
        if let Some((a, b)) = self.provenance.train_index_range {
            out.push_str(&format!("train_index_range={a}..={b}\n"));
        }
        if let Some(t) = self.provenance.trained_through {
            out.push_str(&format!("trained_through={}\n", format_timestamp(t)));
        }
        out
    }
}
