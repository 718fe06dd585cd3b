//! Synthetic fault injection with ground truth, for measuring QC recall.

use super::QcError;
use crate::obs::TimeSeries;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultKind {
    /// Adds `magnitude` to one slot.
    Spike { magnitude: f64 },
    /// Repeats the first value of the window.
    Flatline,
    /// Adds `magnitude` over the window.
    Offset { magnitude: f64 },
    /// Replaces the window with the signal from `lag` slots earlier.
    Shift { lag: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fault {
    pub kind: FaultKind,
    pub start: usize,
    pub len: usize,
}

/// How many faults of each kind to inject, and their shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub spikes: usize,
    /// Spike sign alternates +, −, +, … starting positive.
    pub spike_magnitude: f64,
    pub flatlines: usize,
    pub flatline_len: usize,
    pub offsets: usize,
    pub offset_len: usize,
    pub offset_magnitude: f64,
    pub shifts: usize,
    pub shift_len: usize,
    pub shift_lag: usize,
}

impl Default for FaultSpec {
    fn default() -> Self {
        Self {
            spikes: 0,
            spike_magnitude: 15.0,
            flatlines: 0,
            flatline_len: 12,
            offsets: 0,
            offset_len: 24,
            offset_magnitude: 3.0,
            shifts: 0,
            shift_len: 24,
            shift_lag: 2,
        }
    }
}

impl FaultSpec {
    pub fn total(&self) -> usize {
        self.spikes + self.flatlines + self.offsets + self.shifts
    }
}

/// Apply explicit faults. Windows must lie inside the series and cover
/// observed slots only.
pub fn apply_faults<T: Scalar>(series: &TimeSeries<T>, faults: &[Fault]) -> Result<TimeSeries<T>, QcError> {
    let original = series.values();
    let mut values = original.to_vec();
    for f in faults {
        let n = series.len();
        let lag = match f.kind {
            FaultKind::Shift { lag } => lag,
            _ => 0,
        };
        if f.len == 0 || f.start < lag || f.start + f.len > n {
            return Err(QcError::FaultOutOfRange {
                start: f.start,
                len: f.len,
                series_len: n,
            });
        }
        for i in f.start..f.start + f.len {
            let Some(x) = original[i] else { continue };
            values[i] = match f.kind {
                FaultKind::Spike { magnitude } | FaultKind::Offset { magnitude } => Some(x + T::lit(magnitude)),
                FaultKind::Flatline => original[f.start].or(Some(x)),
                FaultKind::Shift { lag } => original[i - lag].or(Some(x)),
            };
        }
    }
    Ok(series.with_values(values))
}

/// Place the requested faults at random non-overlapping windows of observed
/// slots (with one clean slot between windows) and apply them.
pub fn inject_faults<T: Scalar>(
    series: &TimeSeries<T>,
    spec: &FaultSpec,
    seed: u64,
) -> Result<(TimeSeries<T>, Vec<Fault>), QcError> {
    let n = series.len();
    let limit = n / 10;
    if spec.total() > limit {
        return Err(QcError::TooManyFaults {
            requested: spec.total(),
            limit,
        });
    }
    let mut kinds = Vec::with_capacity(spec.total());
    for k in 0..spec.spikes {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        kinds.push((
            FaultKind::Spike {
                magnitude: sign * spec.spike_magnitude,
            },
            1,
        ));
    }
    kinds.extend((0..spec.flatlines).map(|_| (FaultKind::Flatline, spec.flatline_len)));
    kinds.extend((0..spec.offsets).map(|_| {
        (
            FaultKind::Offset {
                magnitude: spec.offset_magnitude,
            },
            spec.offset_len,
        )
    }));
    kinds.extend((0..spec.shifts).map(|_| (FaultKind::Shift { lag: spec.shift_lag }, spec.shift_len)));

    let mut rng = SplitMix64::new(seed);
    let mut taken = vec![false; n];
    let mut faults = Vec::with_capacity(kinds.len());
    for (k, (kind, len)) in kinds.into_iter().enumerate() {
        let lead = match kind {
            FaultKind::Shift { lag } => lag,
            _ => 0,
        };
        let len = len.max(1);
        if n < len + lead + 2 {
            return Err(QcError::FaultPlacement(k));
        }
        let fits = |s: usize| {
            (s - 1..=s + len).all(|i| !taken[i])
                && (s - lead..s + len).all(|i| !series.is_missing(i))
                && !series.is_missing(s - 1)
                && !series.is_missing(s + len)
        };
        let lo = 1 + lead;
        let span = n - len - lo;
        let mut placed = None;
        for _ in 0..10_000 {
            let s = lo + rng.below(span);
            if fits(s) {
                placed = Some(s);
                break;
            }
        }
        let start = placed.ok_or(QcError::FaultPlacement(k))?;
        for t in &mut taken[start - 1..=start + len] {
            *t = true;
        }
        faults.push(Fault { kind, start, len });
    }
    faults.sort_by_key(|f| f.start);
    let corrupted = apply_faults(series, &faults)?;
    Ok((corrupted, faults))
}
