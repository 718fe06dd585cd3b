//! Seven-check quality control: gross range, climatological envelope, step,
//! persistence, spike, spatial consistency and time-shift detection.

mod checks;
mod config;
mod faults;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checks::lagged_correlation;
pub use config::{CheckToggles, QcConfig};
pub use faults::{apply_faults, inject_faults, Fault, FaultKind, FaultSpec};

use crate::obs::{csv_field, format_timestamp, TimeSeries};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcError {
    #[error("invalid QC config: {0}")]
    InvalidConfig(String),
    #[error("{requested} faults requested but at most {limit} allowed (10% of slots)")]
    TooManyFaults { requested: usize, limit: usize },
    #[error("could not place fault {0} without overlapping another or a missing slot")]
    FaultPlacement(usize),
    #[error("fault at {start}+{len} does not fit a series of length {series_len}")]
    FaultOutOfRange {
        start: usize,
        len: usize,
        series_len: usize,
    },
}

/// Per-slot verdict, ordered by severity; `Missing` sits apart from the scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QcFlag {
    Pass,
    Suspect,
    Fail,
    Missing,
}

impl QcFlag {
    pub fn name(self) -> &'static str {
        match self {
            QcFlag::Pass => "PASS",
            QcFlag::Suspect => "SUSPECT",
            QcFlag::Fail => "FAIL",
            QcFlag::Missing => "MISSING",
        }
    }
}

impl fmt::Display for QcFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QcCheck {
    Range,
    Climatology,
    Step,
    Persistence,
    Spike,
    Spatial,
    TimeShift,
}

impl QcCheck {
    pub const ALL: [QcCheck; 7] = [
        QcCheck::Range,
        QcCheck::Climatology,
        QcCheck::Step,
        QcCheck::Persistence,
        QcCheck::Spike,
        QcCheck::Spatial,
        QcCheck::TimeShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QcCheck::Range => "range",
            QcCheck::Climatology => "climatology",
            QcCheck::Step => "step",
            QcCheck::Persistence => "persistence",
            QcCheck::Spike => "spike",
            QcCheck::Spatial => "spatial",
            QcCheck::TimeShift => "time_shift",
        }
    }
}

impl fmt::Display for QcCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QcCheck {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| QcError::InvalidConfig(format!("unknown check {s:?}")))
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckSummary {
    pub check: QcCheck,
    /// False when disabled or not applicable (no threshold, too short, no neighbours).
    pub ran: bool,
    pub suspect: usize,
    pub fail: usize,
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub neighbor_id: String,
    /// Lag `L` maximising corr(x[t], neighbour[t + L]).
    pub lag: i64,
    pub corr_at_lag: Option<f64>,
    pub corr_at_zero: Option<f64>,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcReport {
    pub station_id: String,
    pub checks: Vec<CheckSummary>,
    pub shifts: Vec<ShiftReport>,
    /// Neighbours not on the series' grid.
    pub skipped_neighbors: Vec<String>,
}

impl QcReport {
    pub fn summary(&self, check: QcCheck) -> &CheckSummary {
        self.checks
            .iter()
            .find(|c| c.check == check)
            .expect("every check is summarised")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("QC report for {}\n", self.station_id);
        for c in &self.checks {
            if c.ran {
                out.push_str(&format!(
                    "  {:<12} suspect={} fail={}\n",
                    c.check.name(),
                    c.suspect,
                    c.fail
                ));
            } else {
                out.push_str(&format!("  {:<12} skipped\n", c.check.name()));
            }
        }
        for s in &self.shifts {
            let fmt_corr = |c: Option<f64>| c.map_or("NA".to_string(), |v| format!("{v:.3}"));
            out.push_str(&format!(
                "  shift vs {}: lag={} corr={} corr0={}{}\n",
                s.neighbor_id,
                s.lag,
                fmt_corr(s.corr_at_lag),
                fmt_corr(s.corr_at_zero),
                if s.detected { " DETECTED" } else { "" }
            ));
        }
        for n in &self.skipped_neighbors {
            out.push_str(&format!("  neighbour {n} skipped: not on the series grid\n"));
        }
        out
    }

    /// One row per (check, flagged slot): `station_id,check,index,timestamp,flag`.
    pub fn to_rows_csv<T: Scalar>(&self, flagged: &FlaggedSeries<T>) -> String {
        let mut out = String::from("station_id,check,index,timestamp,flag\n");
        let station = csv_field(&self.station_id);
        for c in &self.checks {
            let sev = if c.fail > 0 { QcFlag::Fail } else { QcFlag::Suspect };
            for &i in &c.flagged {
                out.push_str(&format!(
                    "{station},{},{i},{},{sev}\n",
                    c.check,
                    format_timestamp(flagged.series.timestamp(i))
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedSeries<T> {
    pub series: TimeSeries<T>,
    pub flags: Vec<QcFlag>,
}

impl<T: Scalar> FlaggedSeries<T> {
    /// Observation CSV with a trailing `flag` column.
    pub fn to_csv(&self) -> String {
        let s = &self.series;
        let mut out = String::from("timestamp,station_id,variable,value,flag\n");
        let station = csv_field(s.station_id());
        let code = s.variable().code();
        for (i, flag) in self.flags.iter().enumerate() {
            let value = s.get(i).map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{station},{code},{value},{flag}\n",
                format_timestamp(s.timestamp(i))
            ));
        }
        out
    }

    pub fn count(&self, flag: QcFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }
}

/// Run the enabled checks in order and merge flags by maximum severity.
pub fn run_qc<T: Scalar>(
    series: &TimeSeries<T>,
    neighbors: &[TimeSeries<T>],
    config: &QcConfig,
) -> (FlaggedSeries<T>, QcReport) {
    let (aligned, skipped): (Vec<&TimeSeries<T>>, Vec<&TimeSeries<T>>) =
        neighbors.iter().partition(|n| series.grid_aligned(n));
    let mut flags: Vec<QcFlag> = (0..series.len())
        .map(|i| {
            if series.is_missing(i) {
                QcFlag::Missing
            } else {
                QcFlag::Pass
            }
        })
        .collect();
    let mut summaries = Vec::with_capacity(QcCheck::ALL.len());
    let mut shifts = Vec::new();
    for check in QcCheck::ALL {
        let result = if !config.checks.enabled(check) {
            None
        } else {
            match check {
                QcCheck::Range => checks::range(series, config),
                QcCheck::Climatology => checks::climatology(series, config),
                QcCheck::Step => checks::step(series, config),
                QcCheck::Persistence => checks::persistence(series, config),
                QcCheck::Spike => checks::spike(series, config),
                QcCheck::Spatial => checks::spatial(series, &aligned, config),
                QcCheck::TimeShift => {
                    shifts = aligned.iter().map(|n| checks::time_shift(series, n, config)).collect();
                    (!aligned.is_empty()).then(Vec::new)
                }
            }
        };
        let mut summary = CheckSummary {
            check,
            ran: result.is_some(),
            suspect: 0,
            fail: 0,
            flagged: Vec::new(),
        };
        for (i, flag) in result.unwrap_or_default() {
            match flag {
                QcFlag::Suspect => summary.suspect += 1,
                QcFlag::Fail => summary.fail += 1,
                _ => continue,
            }
            summary.flagged.push(i);
            if flags[i] != QcFlag::Missing {
                flags[i] = flags[i].max(flag);
            }
        }
        summaries.push(summary);
    }
    let report = QcReport {
        station_id: series.station_id().to_string(),
        checks: summaries,
        shifts,
        skipped_neighbors: skipped.iter().map(|n| n.station_id().to_string()).collect(),
    };
    (
        FlaggedSeries {
            series: series.clone(),
            flags,
        },
        report,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obs::{Step, VariableKind};
    use chrono::{TimeZone, Utc};

    fn ta(values: Vec<Option<f64>>) -> TimeSeries<f64> {
        TimeSeries::new(
            "S",
            VariableKind::Ta,
            Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap(),
            Step::HOURLY,
            values,
            chrono_tz::UTC,
        )
        .unwrap()
    }

    fn wavy(n: usize) -> Vec<Option<f64>> {
        (0..n).map(|i| Some(15.0 + 5.0 * (i as f64 * 0.26).sin())).collect()
    }

    #[test]
    fn gross_range_fails_eighty_degrees() {
        let mut v = wavy(48);
        v[10] = Some(80.0);
        let (f, r) = run_qc(&ta(v), &[], &QcConfig::default());
        assert_eq!(f.flags[10], QcFlag::Fail);
        assert_eq!(r.summary(QcCheck::Range).flagged, vec![10]);
    }

    #[test]
    fn missing_slots_stay_missing() {
        let mut v = wavy(48);
        v[3] = None;
        let (f, _) = run_qc(&ta(v), &[], &QcConfig::default());
        assert_eq!(f.flags[3], QcFlag::Missing);
        assert_eq!(f.count(QcFlag::Missing), 1);
    }

    #[test]
    fn persistence_flags_the_whole_run() {
        let mut v = wavy(48);
        for x in v.iter_mut().skip(20).take(12) {
            *x = Some(7.5);
        }
        let (f, r) = run_qc(&ta(v), &[], &QcConfig::default());
        assert_eq!(r.summary(QcCheck::Persistence).flagged, (20..32).collect::<Vec<_>>());
        assert!((20..32).all(|i| f.flags[i] >= QcFlag::Suspect));
    }

    #[test]
    fn short_series_skips_climatology() {
        let (_, r) = run_qc(&ta(wavy(48)), &[], &QcConfig::default());
        assert!(!r.summary(QcCheck::Climatology).ran);
    }

    #[test]
    fn spike_detected_against_both_neighbours() {
        let mut v = wavy(48);
        v[20] = v[20].map(|x| x + 15.0);
        let (_, r) = run_qc(&ta(v), &[], &QcConfig::default());
        assert_eq!(r.summary(QcCheck::Spike).flagged, vec![20]);
    }

    #[test]
    fn report_formats() {
        let mut v = wavy(48);
        v[10] = Some(80.0);
        let (f, r) = run_qc(&ta(v), &[], &QcConfig::default());
        assert!(r.to_text().contains("range        suspect=0 fail=1"));
        assert!(r.to_rows_csv(&f).contains("S,range,10,2021-06-01T10:00:00Z,FAIL"));
        assert!(f.to_csv().lines().nth(11).unwrap().ends_with(",80,FAIL"));
    }
}
