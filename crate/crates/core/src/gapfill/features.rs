use std::f64::consts::TAU;

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Utc};

use super::{FeatureSetKind, GapFillError};
use crate::obs::TimeSeries;
use crate::scalar::Scalar;

/// Auxiliary series available to feature construction.
#[derive(Debug, Clone, Copy)]
pub struct FeatureContext<'a, T> {
    /// Same-variable series from other stations.
    pub neighbors: &'a [TimeSeries<T>],
    pub reanalysis: Option<&'a TimeSeries<T>>,
}

impl<'a, T> FeatureContext<'a, T> {
    pub fn new(neighbors: &'a [TimeSeries<T>], reanalysis: Option<&'a TimeSeries<T>>) -> Self {
        Self { neighbors, reanalysis }
    }

    pub fn empty() -> Self {
        Self {
            neighbors: &[],
            reanalysis: None,
        }
    }
}

/// Feature rows (no target), one per usable slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRows<T> {
    pub column_names: Vec<String>,
    /// Series index each row was built from.
    pub indices: Vec<usize>,
    pub timestamps: Vec<DateTime<Utc>>,
    pub rows: Vec<Vec<T>>,
    /// Requested slots skipped because a feature was missing.
    pub unavailable: Vec<usize>,
}

impl<T> FeatureRows<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }
}

/// Training matrix: feature rows plus the aligned target.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    pub features: FeatureRows<T>,
    pub target: Vec<T>,
    /// Rows dropped because some feature was missing (target was observed).
    pub dropped_rows: usize,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Matrix from explicit rows, for callers that build their own features.
    pub fn from_rows(column_names: Vec<String>, rows: Vec<Vec<T>>, target: Vec<T>) -> Self {
        assert_eq!(rows.len(), target.len(), "rows and target must align");
        let n = rows.len();
        Self {
            features: FeatureRows {
                column_names,
                indices: (0..n).collect(),
                timestamps: vec![DateTime::<Utc>::UNIX_EPOCH; n],
                rows,
                unavailable: Vec::new(),
            },
            target,
            dropped_rows: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }
}

pub const TEMPORAL_COLUMNS: [&str; 4] = ["hour_sin", "hour_cos", "doy_sin", "doy_cos"];

pub fn neighbor_column(station_id: &str) -> String {
    format!("nbr:{station_id}")
}

pub const REANALYSIS_COLUMN: &str = "rea";

pub fn column_names<T: Copy>(kind: FeatureSetKind, ctx: &FeatureContext<'_, T>) -> Vec<String> {
    let mut cols: Vec<String> = TEMPORAL_COLUMNS.iter().map(|s| s.to_string()).collect();
    if kind.uses_neighbors() {
        cols.extend(ctx.neighbors.iter().map(|n| neighbor_column(n.station_id())));
    }
    if kind.uses_reanalysis() {
        cols.push(REANALYSIS_COLUMN.to_string());
    }
    cols
}

/// sin/cos of local hour-of-day and day-of-year angles.
pub fn temporal_features<T: Scalar>(t: DateTime<Utc>, tz: chrono_tz::Tz) -> [T; 4] {
    let local = t.with_timezone(&tz);
    let hour = local.hour() as f64 + local.minute() as f64 / 60.0;
    let hour_angle = TAU * hour / 24.0;
    let year = local.year();
    let days_in_year = NaiveDate::from_ymd_opt(year + 1, 1, 1)
        .zip(NaiveDate::from_ymd_opt(year, 1, 1))
        .map_or(365.0, |(next, this)| (next - this).num_days() as f64);
    let day_angle = TAU * local.ordinal0() as f64 / days_in_year;
    [
        T::lit(hour_angle.sin()),
        T::lit(hour_angle.cos()),
        T::lit(day_angle.sin()),
        T::lit(day_angle.cos()),
    ]
}

fn check_context<T: Copy>(
    target: &TimeSeries<T>,
    ctx: &FeatureContext<'_, T>,
    kind: FeatureSetKind,
) -> Result<(), GapFillError> {
    if kind.uses_reanalysis() {
        let rea = ctx.reanalysis.ok_or(GapFillError::MissingReanalysis)?;
        if !target.grid_aligned(rea) {
            return Err(GapFillError::StepMismatch(rea.station_id().to_string()));
        }
    }
    if kind.uses_neighbors() {
        if let Some(n) = ctx.neighbors.iter().find(|n| !target.grid_aligned(n)) {
            return Err(GapFillError::StepMismatch(n.station_id().to_string()));
        }
    }
    Ok(())
}

fn row_at<T: Scalar>(
    target: &TimeSeries<T>,
    ctx: &FeatureContext<'_, T>,
    kind: FeatureSetKind,
    i: usize,
) -> Option<Vec<T>> {
    let t = target.timestamp(i);
    let mut row: Vec<T> = temporal_features(t, target.tz()).to_vec();
    if kind.uses_neighbors() {
        for n in ctx.neighbors {
            row.push(n.value_at(t)?);
        }
    }
    if kind.uses_reanalysis() {
        row.push(ctx.reanalysis?.value_at(t)?);
    }
    Some(row)
}

/// Feature rows for the requested slots, regardless of whether the target is observed.
pub fn build_query_features<T: Scalar>(
    target: &TimeSeries<T>,
    ctx: &FeatureContext<'_, T>,
    kind: FeatureSetKind,
    indices: &[usize],
) -> Result<FeatureRows<T>, GapFillError> {
    check_context(target, ctx, kind)?;
    let mut out = FeatureRows {
        column_names: column_names(kind, ctx),
        indices: Vec::new(),
        timestamps: Vec::new(),
        rows: Vec::new(),
        unavailable: Vec::new(),
    };
    for &i in indices {
        match row_at(target, ctx, kind, i) {
            Some(row) => {
                out.indices.push(i);
                out.timestamps.push(target.timestamp(i));
                out.rows.push(row);
            }
            None => out.unavailable.push(i),
        }
    }
    Ok(out)
}

/// Training matrix over the requested slots where the target is observed.
/// Rows with any missing feature are dropped and counted.
pub fn build_features<T: Scalar>(
    target: &TimeSeries<T>,
    ctx: &FeatureContext<'_, T>,
    kind: FeatureSetKind,
    indices: &[usize],
) -> Result<DesignMatrix<T>, GapFillError> {
    let observed: Vec<usize> = indices.iter().copied().filter(|&i| !target.is_missing(i)).collect();
    let features = build_query_features(target, ctx, kind, &observed)?;
    let target_values = features
        .indices
        .iter()
        .map(|&i| target.get(i).expect("filtered to observed slots"))
        .collect();
    Ok(DesignMatrix {
        dropped_rows: features.unavailable.len(),
        features,
        target: target_values,
    })
}
