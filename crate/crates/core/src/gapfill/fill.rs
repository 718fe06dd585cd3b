use std::fmt;

use chrono::{DateTime, Utc};

use super::{
    build_features, build_query_features, fit_debias, FeatureContext, FeatureSetKind, Fitted, GapFillError,
    GapFillModel, ModelKind, ModelParams, DEFAULT_MIN_SAMPLES,
};
use crate::interp::{Interpolant1D, Knots1D, Method1D, RbfInterpolant, RbfKernel, RbfKernelKind, ScatterND};
use crate::obs::{csv_field, detect_gaps, format_timestamp, TimeSeries};
use crate::scalar::Scalar;

/// What produced a filled value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillSource {
    Model {
        kind: ModelKind,
        feature_set: Option<FeatureSetKind>,
    },
    Interp(Method1D),
    Rbf(RbfKernelKind),
}

impl fmt::Display for FillSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillSource::Model {
                kind,
                feature_set: Some(fs),
            } => write!(f, "{kind}/{fs}"),
            FillSource::Model {
                kind,
                feature_set: None,
            } => write!(f, "{kind}"),
            FillSource::Interp(m) => write!(f, "INTERP_{}", m.name().to_ascii_uppercase()),
            FillSource::Rbf(k) => write!(f, "RBF_{}", k.name().to_ascii_uppercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillRecord {
    pub index: usize,
    pub timestamp: DateTime<Utc>,
    pub source: FillSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillResult<T> {
    pub series: TimeSeries<T>,
    /// One record per filled slot, in index order.
    pub provenance: Vec<FillRecord>,
    /// Missing slots no method could fill.
    pub unfillable: Vec<usize>,
}

impl<T: Scalar> FillResult<T> {
    fn assemble(series: &TimeSeries<T>, mut filled: Vec<(usize, T, FillSource)>, unfillable: Vec<usize>) -> Self {
        filled.sort_by_key(|f| f.0);
        let mut values = series.values().to_vec();
        let mut provenance = Vec::with_capacity(filled.len());
        for (i, v, source) in filled {
            debug_assert!(values[i].is_none(), "observed slots are never overwritten");
            values[i] = Some(v);
            provenance.push(FillRecord {
                index: i,
                timestamp: series.timestamp(i),
                source,
            });
        }
        let mut unfillable = unfillable;
        unfillable.sort_unstable();
        Self {
            series: series.with_values(values),
            provenance,
            unfillable,
        }
    }

    /// Provenance as CSV: `station_id,variable,timestamp,index,source`.
    pub fn provenance_csv(&self) -> String {
        let mut out = String::from("station_id,variable,timestamp,index,source\n");
        let station = csv_field(self.series.station_id());
        let code = self.series.variable().code();
        for r in &self.provenance {
            out.push_str(&format!(
                "{station},{code},{},{},{}\n",
                format_timestamp(r.timestamp),
                r.index,
                r.source
            ));
        }
        out
    }
}

fn missing_indices<T: Copy>(series: &TimeSeries<T>) -> Vec<usize> {
    (0..series.len()).filter(|&i| series.is_missing(i)).collect()
}

/// Linear interpolation between the observations flanking each gap; gaps open
/// at either end of the series stay missing.
fn linear_baseline<T: Scalar>(series: &TimeSeries<T>, targets: &[usize]) -> Vec<(usize, T)> {
    let n = series.len();
    let mut prev = vec![None; n];
    let mut last = None;
    for (i, p) in prev.iter_mut().enumerate() {
        if series.get(i).is_some() {
            last = Some(i);
        }
        *p = last;
    }
    let mut next = vec![None; n];
    last = None;
    for i in (0..n).rev() {
        if series.get(i).is_some() {
            last = Some(i);
        }
        next[i] = last;
    }
    let mut out = Vec::new();
    for &i in targets {
        let value = match (prev[i], next[i]) {
            (Some(l), Some(r)) => {
                let (yl, yr) = (series.get(l).unwrap(), series.get(r).unwrap());
                Knots1D::new(vec![T::from_usize_lossy(l), T::from_usize_lossy(r)], vec![yl, yr])
                    .and_then(|k| Interpolant1D::fit(k, Method1D::Linear))
                    .ok()
                    .and_then(|f| f.eval(T::from_usize_lossy(i), false))
            }
            _ => None,
        };
        if let Some(v) = value {
            out.push((i, v));
        }
    }
    out
}

fn model_fills<T: Scalar>(
    series: &TimeSeries<T>,
    model: &GapFillModel<T>,
    ctx: &FeatureContext<'_, T>,
    targets: &[usize],
) -> Vec<(usize, T)> {
    match model.fitted() {
        Fitted::LinearInterp => linear_baseline(series, targets),
        Fitted::Debias(table) => match ctx.reanalysis {
            Some(rea) if series.grid_aligned(rea) => targets
                .iter()
                .filter_map(|&i| table.fill_value(series, rea, i).map(|v| (i, v)))
                .collect(),
            _ => Vec::new(),
        },
        _ => {
            let fs = model.feature_set().unwrap_or(FeatureSetKind::Temporal);
            let Ok(rows) = build_query_features(series, ctx, fs, targets) else {
                return Vec::new();
            };
            match model.predict(&rows) {
                Ok(pred) => rows.indices.into_iter().zip(pred).collect(),
                Err(_) => Vec::new(),
            }
        }
    }
}

/// Fill every missing slot with the first model in `chain` able to produce a
/// value there. Observed slots are left untouched.
pub fn fill_gaps<T: Scalar>(
    series: &TimeSeries<T>,
    chain: &[GapFillModel<T>],
    ctx: &FeatureContext<'_, T>,
) -> FillResult<T> {
    let mut remaining = missing_indices(series);
    let mut filled = Vec::new();
    for model in chain {
        if remaining.is_empty() {
            break;
        }
        let source = FillSource::Model {
            kind: model.kind(),
            feature_set: model.feature_set(),
        };
        let got = model_fills(series, model, ctx, &remaining);
        let mut done = vec![false; series.len()];
        for (i, v) in got {
            if v.is_finite() {
                done[i] = true;
                filled.push((i, v, source));
            }
        }
        remaining.retain(|&i| !done[i]);
    }
    FillResult::assemble(series, filled, remaining)
}

/// Fit `kind` on the observed part of `train` together with the fallback
/// models used when the requested feature set cannot be built for a slot.
pub fn fit_with_fallbacks<T: Scalar>(
    kind: ModelKind,
    train: &TimeSeries<T>,
    ctx: &FeatureContext<'_, T>,
    feature_set: FeatureSetKind,
    params: &ModelParams,
    seed: u64,
) -> Result<Vec<GapFillModel<T>>, GapFillError> {
    match kind {
        ModelKind::BaselineLinearInterp => return Ok(vec![GapFillModel::linear_interp()]),
        ModelKind::BaselineDebias => {
            let rea = ctx.reanalysis.ok_or(GapFillError::MissingReanalysis)?;
            let table = fit_debias(train, rea, DEFAULT_MIN_SAMPLES)?;
            return Ok(vec![GapFillModel::debias(table, train)]);
        }
        _ => {}
    }
    let all: Vec<usize> = (0..train.len()).collect();
    let mut chain = Vec::new();
    for (k, fs) in feature_set.fallbacks().into_iter().enumerate() {
        let fitted =
            build_features(train, ctx, fs, &all).and_then(|x| GapFillModel::fit(kind, &x, Some(fs), params, seed));
        match fitted {
            Ok(m) => chain.push(m),
            Err(e) if k == 0 => return Err(e),
            Err(_) => {}
        }
    }
    Ok(chain)
}

/// Fit `kind` on `train` and fill its gaps. Fallback models are fitted only
/// when the requested feature set leaves slots unfilled. Returns the fill and
/// the models actually used, in chain order.
pub fn fit_and_fill<T: Scalar>(
    kind: ModelKind,
    train: &TimeSeries<T>,
    ctx: &FeatureContext<'_, T>,
    feature_set: FeatureSetKind,
    params: &ModelParams,
    seed: u64,
) -> Result<(FillResult<T>, Vec<GapFillModel<T>>), GapFillError> {
    if !kind.is_ml() {
        let chain = fit_with_fallbacks(kind, train, ctx, feature_set, params, seed)?;
        return Ok((fill_gaps(train, &chain, ctx), chain));
    }
    let all: Vec<usize> = (0..train.len()).collect();
    let mut chain = Vec::new();
    let mut result = None;
    for (k, fs) in feature_set.fallbacks().into_iter().enumerate() {
        let fitted =
            build_features(train, ctx, fs, &all).and_then(|x| GapFillModel::fit(kind, &x, Some(fs), params, seed));
        match fitted {
            Ok(m) => chain.push(m),
            Err(e) if k == 0 => return Err(e),
            Err(_) => continue,
        }
        let r = fill_gaps(train, &chain, ctx);
        let done = r.unfillable.is_empty();
        result = Some(r);
        if done {
            break;
        }
    }
    let result = result.unwrap_or_else(|| fill_gaps(train, &chain, ctx));
    Ok((result, chain))
}

/// Fill interior gaps with a 1-D interpolant over all observed slots, indexed
/// by slot number. Slots outside the observed range stay missing.
pub fn fill_by_interpolation<T: Scalar>(
    series: &TimeSeries<T>,
    method: Method1D,
) -> Result<FillResult<T>, GapFillError> {
    let missing = missing_indices(series);
    if missing.is_empty() {
        return Ok(FillResult::assemble(series, Vec::new(), Vec::new()));
    }
    let (x, y): (Vec<T>, Vec<T>) = (0..series.len())
        .filter_map(|i| series.get(i).map(|v| (T::from_usize_lossy(i), v)))
        .unzip();
    let f = Interpolant1D::fit(Knots1D::new(x, y)?, method)?;
    let mut filled = Vec::new();
    let mut unfillable = Vec::new();
    for i in missing {
        match f.eval(T::from_usize_lossy(i), false) {
            Some(v) => filled.push((i, v, FillSource::Interp(method))),
            None => unfillable.push(i),
        }
    }
    Ok(FillResult::assemble(series, filled, unfillable))
}

/// Fill each gap with a radial basis interpolant through up to `window`
/// observed slots on each side, placed at `(slot, 0)` in the plane.
pub fn fill_by_rbf<T: Scalar>(
    series: &TimeSeries<T>,
    kernel: RbfKernel<T>,
    window: usize,
) -> Result<FillResult<T>, GapFillError> {
    let observed: Vec<usize> = (0..series.len()).filter(|&i| !series.is_missing(i)).collect();
    let mut filled = Vec::new();
    let mut unfillable = Vec::new();
    for gap in detect_gaps(series) {
        let (a, b) = (gap.start_index, gap.start_index + gap.length);
        let split = observed.partition_point(|&i| i < a);
        let lo = split.saturating_sub(window);
        let hi = (split + window).min(observed.len());
        let support = &observed[lo..hi];
        if support.is_empty() {
            unfillable.extend(a..b);
            continue;
        }
        let points: Vec<Vec<T>> = support
            .iter()
            .map(|&i| vec![T::from_usize_lossy(i), T::zero()])
            .collect();
        let values = support.iter().map(|&i| series.get(i).unwrap()).collect();
        let f = RbfInterpolant::fit(&ScatterND::new(&points, values)?, kernel)?;
        for i in a..b {
            let v = f.eval(&[T::from_usize_lossy(i), T::zero()])?;
            if v.is_finite() {
                filled.push((i, v, FillSource::Rbf(kernel.kind())));
            } else {
                unfillable.push(i);
            }
        }
    }
    Ok(FillResult::assemble(series, filled, unfillable))
}
