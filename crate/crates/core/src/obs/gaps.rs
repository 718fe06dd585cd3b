use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};

use super::{TimeSeries, VariableKind};

/// A maximal run of missing slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapRecord {
    pub start_index: usize,
    pub length: usize,
    pub start_time: DateTime<Utc>,
    /// Timestamp of the last missing slot of the run.
    pub end_time: DateTime<Utc>,
    pub variable: VariableKind,
}

/// Gap length classes, in slots. Boundaries follow the tested gap sizes 1, 3, 6, 12, 24, 48.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DurationClass {
    One,
    TwoToThree,
    FourToSix,
    SevenToTwelve,
    ThirteenTo24,
    TwentyFiveTo48,
    Over48,
}

impl DurationClass {
    pub const ALL: [DurationClass; 7] = [
        DurationClass::One,
        DurationClass::TwoToThree,
        DurationClass::FourToSix,
        DurationClass::SevenToTwelve,
        DurationClass::ThirteenTo24,
        DurationClass::TwentyFiveTo48,
        DurationClass::Over48,
    ];

    pub fn of_length(len: usize) -> DurationClass {
        match len {
            0 | 1 => DurationClass::One,
            2..=3 => DurationClass::TwoToThree,
            4..=6 => DurationClass::FourToSix,
            7..=12 => DurationClass::SevenToTwelve,
            13..=24 => DurationClass::ThirteenTo24,
            25..=48 => DurationClass::TwentyFiveTo48,
            _ => DurationClass::Over48,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DurationClass::One => "1",
            DurationClass::TwoToThree => "2-3",
            DurationClass::FourToSix => "4-6",
            DurationClass::SevenToTwelve => "7-12",
            DurationClass::ThirteenTo24 => "13-24",
            DurationClass::TwentyFiveTo48 => "25-48",
            DurationClass::Over48 => ">48",
        }
    }
}

impl fmt::Display for DurationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// Every class is present, zero counts included.
    pub duration_histogram: BTreeMap<DurationClass, usize>,
    /// Gap starts per local hour of day.
    pub timing_by_hour: [usize; 24],
    /// Gap starts per local calendar month (index 0 = January).
    pub timing_by_month: [usize; 12],
    /// Fraction of gaps whose start hour equals the modal start hour; 0 without gaps.
    pub recurrence_score: f64,
    pub total_missing_fraction: f64,
    pub gap_count: usize,
}

/// Maximal runs of missing slots, ordered by start index.
pub fn detect_gaps<T: Copy>(series: &TimeSeries<T>) -> Vec<GapRecord> {
    let mut gaps = Vec::new();
    let values = series.values();
    let mut i = 0;
    while i < values.len() {
        if values[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < values.len() && values[i].is_none() {
            i += 1;
        }
        gaps.push(GapRecord {
            start_index: start,
            length: i - start,
            start_time: series.timestamp(start),
            end_time: series.timestamp(i - 1),
            variable: series.variable().clone(),
        });
    }
    gaps
}

pub fn profile_gaps<T: Copy>(series: &TimeSeries<T>) -> GapProfile {
    let gaps = detect_gaps(series);
    let mut duration_histogram: BTreeMap<DurationClass, usize> = DurationClass::ALL.iter().map(|&c| (c, 0)).collect();
    let mut timing_by_hour = [0usize; 24];
    let mut timing_by_month = [0usize; 12];
    for g in &gaps {
        *duration_histogram
            .entry(DurationClass::of_length(g.length))
            .or_default() += 1;
        timing_by_hour[series.local_hour(g.start_index) as usize] += 1;
        timing_by_month[series.local_month(g.start_index) as usize - 1] += 1;
    }
    let recurrence_score = if gaps.is_empty() {
        0.0
    } else {
        *timing_by_hour.iter().max().unwrap_or(&0) as f64 / gaps.len() as f64
    };
    GapProfile {
        duration_histogram,
        timing_by_hour,
        timing_by_month,
        recurrence_score,
        total_missing_fraction: series.missing_count() as f64 / series.len() as f64,
        gap_count: gaps.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obs::Step;
    use chrono::TimeZone;
    use chrono_tz::Tz;
    use proptest::prelude::*;

    fn series(values: Vec<Option<f64>>) -> TimeSeries<f64> {
        TimeSeries::new(
            "S",
            VariableKind::Ta,
            Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            Step::HOURLY,
            values,
            Tz::UTC,
        )
        .unwrap()
    }

    /// Independent run-length oracle: compare each slot with its predecessor.
    fn run_length_oracle(missing: &[bool]) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (i, &m) in missing.iter().enumerate() {
            if !m {
                continue;
            }
            if i > 0 && missing[i - 1] {
                out.last_mut().unwrap().1 += 1;
            } else {
                out.push((i, 1));
            }
        }
        out
    }

    #[test]
    fn fully_observed_has_no_gaps() {
        assert!(detect_gaps(&series(vec![Some(1.0); 10])).is_empty());
    }

    #[test]
    fn two_runs_found() {
        let s = series(vec![Some(1.0), None, None, Some(2.0), None]);
        let g: Vec<_> = detect_gaps(&s).iter().map(|g| (g.start_index, g.length)).collect();
        assert_eq!(g, vec![(1, 2), (4, 1)]);
        assert_eq!(g, run_length_oracle(&[false, true, true, false, true]));
    }

    #[test]
    fn all_missing_is_one_gap() {
        let g = detect_gaps(&series(vec![None; 5]));
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].start_index, g[0].length), (0, 5));
        assert_eq!(g[0].end_time, Utc.with_ymd_and_hms(2024, 1, 1, 4, 0, 0).unwrap());
    }

    #[test]
    fn profile_of_gapless_series_is_zero() {
        let p = profile_gaps(&series(vec![Some(0.0); 48]));
        assert!(p.duration_histogram.values().all(|&c| c == 0));
        assert_eq!(p.total_missing_fraction, 0.0);
        assert_eq!(p.recurrence_score, 0.0);
    }

    #[test]
    fn gaps_at_same_local_hour_recur_fully() {
        // 10 days, a one-slot gap every day at 03:00 Belgrade time (02:00 UTC in winter).
        let mut v = vec![Some(1.0); 240];
        for d in 0..10 {
            v[d * 24 + 2] = None;
        }
        let s = series(v).with_tz(chrono_tz::Europe::Belgrade);
        let p = profile_gaps(&s);
        assert_eq!(p.gap_count, 10);
        assert_eq!(p.timing_by_hour[3], 10);
        assert_eq!(p.recurrence_score, 1.0);
        assert_eq!(p.timing_by_month[0], 10);
    }

    #[test]
    fn histogram_classifies_lengths() {
        // gaps of length 1, 3, 5
        let mut v = vec![Some(1.0); 20];
        v[1] = None;
        for i in 4..7 {
            v[i] = None;
        }
        for i in 10..15 {
            v[i] = None;
        }
        let p = profile_gaps(&series(v));
        let h = &p.duration_histogram;
        assert_eq!(h[&DurationClass::One], 1);
        assert_eq!(h[&DurationClass::TwoToThree], 1);
        assert_eq!(h[&DurationClass::FourToSix], 1);
        assert_eq!(h.values().sum::<usize>(), 3);
        assert!((p.total_missing_fraction - 9.0 / 20.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn gaps_are_disjoint_maximal_and_partition_the_index_set(
            missing in proptest::collection::vec(any::<bool>(), 1..200)
        ) {
            let s = series(missing.iter().map(|&m| if m { None } else { Some(1.0) }).collect());
            let gaps = detect_gaps(&s);
            let found: Vec<_> = gaps.iter().map(|g| (g.start_index, g.length)).collect();
            prop_assert_eq!(&found, &run_length_oracle(&missing));

            let mut covered = vec![false; missing.len()];
            for g in &gaps {
                prop_assert!(g.length >= 1);
                if g.start_index > 0 { prop_assert!(!missing[g.start_index - 1]); }
                let end = g.start_index + g.length;
                if end < missing.len() { prop_assert!(!missing[end]); }
                for c in covered.iter_mut().skip(g.start_index).take(g.length) {
                    prop_assert!(!*c);
                    *c = true;
                }
            }
            prop_assert_eq!(covered, missing);

            let p = profile_gaps(&s);
            prop_assert_eq!(p.duration_histogram.values().sum::<usize>(), gaps.len());
        }
    }
}
