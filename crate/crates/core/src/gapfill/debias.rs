use super::GapFillError;
use crate::obs::{Season, TimeSeries};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_SAMPLES: usize = 10;

/// Hour-of-day × season mean of `obs − reanalysis`, with hour-only and global
/// fallbacks for thin cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasTable<T> {
    bias: [[Option<T>; 4]; 24],
    counts: [[usize; 4]; 24],
    hour_bias: [Option<T>; 24],
    global: Option<T>,
    min_samples: usize,
}

impl<T: Scalar> DebiasTable<T> {
    /// Bias for a local hour and season, following the fallback chain.
    pub fn lookup(&self, hour: usize, season: Season) -> T {
        self.bias[hour][season.index()]
            .or(self.hour_bias[hour])
            .or(self.global)
            .unwrap_or_else(T::zero)
    }

    /// Populated cell value, `None` when the cell falls back.
    pub fn cell(&self, hour: usize, season: Season) -> Option<T> {
        self.bias[hour][season.index()]
    }

    pub fn sample_count(&self, hour: usize, season: Season) -> usize {
        self.counts[hour][season.index()]
    }

    pub fn hour_fallback(&self, hour: usize) -> Option<T> {
        self.hour_bias[hour]
    }

    pub fn global_fallback(&self) -> Option<T> {
        self.global
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples
    }

    /// Debiased reanalysis value at slot `i` of `target`'s grid, if the
    /// reanalysis covers that timestamp.
    pub fn fill_value(&self, target: &TimeSeries<T>, rea: &TimeSeries<T>, i: usize) -> Option<T> {
        let t = target.timestamp(i);
        let r = rea.value_at(t)?;
        Some(r + self.lookup(target.local_hour(i) as usize, target.local_season(i)))
    }
}

pub fn fit_debias<T: Scalar>(
    obs: &TimeSeries<T>,
    rea: &TimeSeries<T>,
    min_samples: usize,
) -> Result<DebiasTable<T>, GapFillError> {
    if !obs.grid_aligned(rea) {
        return Err(GapFillError::StepMismatch(rea.station_id().to_string()));
    }
    let mut sums = [[T::zero(); 4]; 24];
    let mut counts = [[0usize; 4]; 24];
    for i in 0..obs.len() {
        let Some(o) = obs.get(i) else { continue };
        let t = obs.timestamp(i);
        let Some(r) = rea.value_at(t) else { continue };
        let h = obs.local_hour(i) as usize;
        let s = obs.local_season(i).index();
        sums[h][s] = sums[h][s] + (o - r);
        counts[h][s] += 1;
    }
    let total: usize = counts.iter().flatten().sum();
    if total == 0 {
        return Err(GapFillError::NoOverlap);
    }
    let min = min_samples.max(1);
    let mut bias = [[None; 4]; 24];
    let mut hour_bias = [None; 24];
    let mut global_sum = T::zero();
    for h in 0..24 {
        for s in 0..4 {
            if counts[h][s] >= min {
                bias[h][s] = Some(sums[h][s] / T::from_usize_lossy(counts[h][s]));
            }
        }
        let hs: T = sums[h].iter().copied().sum();
        let hc: usize = counts[h].iter().sum();
        if hc >= min {
            hour_bias[h] = Some(hs / T::from_usize_lossy(hc));
        }
        global_sum = global_sum + hs;
    }
    Ok(DebiasTable {
        bias,
        counts,
        hour_bias,
        global: Some(global_sum / T::from_usize_lossy(total)),
        min_samples: min,
    })
}
