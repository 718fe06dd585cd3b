//! The individual checks. Each returns the slots it flags; the pipeline merges
//! severities.

use super::{QcConfig, QcFlag, ShiftReport};
use crate::obs::TimeSeries;
use crate::scalar::{median, Scalar};

pub(crate) type Flags = Vec<(usize, QcFlag)>;

pub(crate) fn range<T: Scalar>(s: &TimeSeries<T>, cfg: &QcConfig) -> Option<Flags> {
    let (lo, hi) = cfg.range_for(s.variable())?;
    let (lo, hi) = (T::lit(lo), T::lit(hi));
    Some(
        (0..s.len())
            .filter(|&i| s.get(i).is_some_and(|v| !(v >= lo && v <= hi)))
            .map(|i| (i, QcFlag::Fail))
            .collect(),
    )
}

/// Monthly mean ± σ·stdev envelope computed from the series itself.
pub(crate) fn climatology<T: Scalar>(s: &TimeSeries<T>, cfg: &QcConfig) -> Option<Flags> {
    let span_days = s.len() as f64 * s.step().secs() as f64 / 86_400.0;
    if span_days < cfg.climatology_min_days {
        return None;
    }
    let mut by_month: [Vec<T>; 12] = Default::default();
    for i in 0..s.len() {
        if let Some(v) = s.get(i) {
            by_month[s.local_month(i) as usize - 1].push(v);
        }
    }
    let stats: Vec<Option<(T, T)>> = by_month
        .iter()
        .map(|vals| {
            let m = crate::scalar::mean(vals)?;
            let sd = crate::scalar::population_std(vals)?;
            (vals.len() >= 2 && sd > T::zero()).then_some((m, sd))
        })
        .collect();
    let k = T::lit(cfg.climatology_sigma);
    Some(
        (0..s.len())
            .filter(|&i| {
                let Some(v) = s.get(i) else { return false };
                stats[s.local_month(i) as usize - 1].is_some_and(|(m, sd)| (v - m).abs() > k * sd)
            })
            .map(|i| (i, QcFlag::Suspect))
            .collect(),
    )
}

pub(crate) fn step<T: Scalar>(s: &TimeSeries<T>, cfg: &QcConfig) -> Option<Flags> {
    let limit = T::lit(cfg.max_step_for(s.variable())?);
    Some(
        (1..s.len())
            .filter(|&i| match (s.get(i - 1), s.get(i)) {
                (Some(a), Some(b)) => (b - a).abs() > limit,
                _ => false,
            })
            .map(|i| (i, QcFlag::Suspect))
            .collect(),
    )
}

/// Runs of at least K identical consecutive observations.
pub(crate) fn persistence<T: Scalar>(s: &TimeSeries<T>, cfg: &QcConfig) -> Option<Flags> {
    if cfg.persistence_exempt(s.variable()) {
        return None;
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let Some(v) = s.get(i) else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < s.len() && s.get(j) == Some(v) {
            j += 1;
        }
        if j - i >= cfg.persistence_k {
            out.extend((i..j).map(|k| (k, QcFlag::Suspect)));
        }
        i = j;
    }
    Some(out)
}

/// A value that departs from both temporal neighbours in the same direction.
pub(crate) fn spike<T: Scalar>(s: &TimeSeries<T>, cfg: &QcConfig) -> Option<Flags> {
    let thr = T::lit(cfg.spike_threshold);
    let half = thr / T::lit(2.0);
    Some(
        (1..s.len().saturating_sub(1))
            .filter(|&i| {
                let (Some(a), Some(x), Some(b)) = (s.get(i - 1), s.get(i), s.get(i + 1)) else {
                    return false;
                };
                let (da, db) = (x - a, x - b);
                (x - (a + b) / T::lit(2.0)).abs() > thr
                    && da.abs() > half
                    && db.abs() > half
                    && da.signum() == db.signum()
            })
            .map(|i| (i, QcFlag::Suspect))
            .collect(),
    )
}

/// Robust z-score of `x − median(neighbours)` over time.
pub(crate) fn spatial<T: Scalar>(s: &TimeSeries<T>, neighbors: &[&TimeSeries<T>], cfg: &QcConfig) -> Option<Flags> {
    if neighbors.is_empty() {
        return None;
    }
    let mut diffs: Vec<(usize, T)> = Vec::new();
    let mut at_t = Vec::with_capacity(neighbors.len());
    for i in 0..s.len() {
        let Some(x) = s.get(i) else { continue };
        let t = s.timestamp(i);
        at_t.clear();
        at_t.extend(neighbors.iter().filter_map(|n| n.value_at(t)));
        if let Some(m) = median(&at_t) {
            diffs.push((i, x - m));
        }
    }
    let values: Vec<T> = diffs.iter().map(|d| d.1).collect();
    let center = median(&values)?;
    let deviations: Vec<T> = values.iter().map(|v| (*v - center).abs()).collect();
    let mad = median(&deviations)?;
    if mad <= T::zero() {
        return None;
    }
    // 1.4826 scales the MAD to a standard deviation under normality.
    let scale = T::lit(1.4826) * mad;
    let m = T::lit(cfg.spatial_m);
    Some(
        diffs
            .into_iter()
            .filter(|(_, d)| ((*d - center) / scale).abs() > m)
            .map(|(i, _)| (i, QcFlag::Suspect))
            .collect(),
    )
}

const MIN_CORR_PAIRS: usize = 10;

/// Pearson correlation of `x[t]` with `y[t + lag]` over slots where both exist.
pub fn lagged_correlation<T: Scalar>(x: &TimeSeries<T>, y: &TimeSeries<T>, lag: i64) -> Option<f64> {
    let step = y.step().duration();
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0usize, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let Some(a) = x.get(i) else { continue };
        let Some(b) = y.value_at(x.timestamp(i) + step * lag as i32) else {
            continue;
        };
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        n += 1;
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    if n < MIN_CORR_PAIRS {
        return None;
    }
    let nf = n as f64;
    let cov = sxy - sx * sy / nf;
    let vx = sxx - sx * sx / nf;
    let vy = syy - sy * sy / nf;
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

pub(crate) fn time_shift<T: Scalar>(s: &TimeSeries<T>, neighbor: &TimeSeries<T>, cfg: &QcConfig) -> ShiftReport {
    let max_lag = cfg.shift_max_lag as i64;
    let zero = lagged_correlation(s, neighbor, 0);
    let mut best: Option<(i64, f64)> = None;
    for lag in -max_lag..=max_lag {
        if let Some(c) = lagged_correlation(s, neighbor, lag) {
            // Ties go to the lag closest to zero, then the negative side.
            let better = best.is_none_or(|(bl, bc)| c > bc || (c == bc && lag.abs() < bl.abs()));
            if better {
                best = Some((lag, c));
            }
        }
    }
    let (lag, corr) = best.map_or((0, None), |(l, c)| (l, Some(c)));
    let detected = lag != 0
        && match (corr, zero) {
            (Some(c), Some(z)) => c - z >= cfg.shift_min_gain,
            (Some(_), None) => true,
            _ => false,
        };
    ShiftReport {
        neighbor_id: neighbor.station_id().to_string(),
        lag,
        corr_at_lag: corr,
        corr_at_zero: zero,
        detected,
    }
}
