//! Station time series: the canonical data model, CSV ingestion, gap
//! detection and profiling, and dew point / relative humidity conversion.

mod csv_io;
mod gaps;
mod thermo;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{csv_field, format_timestamp, parse_observations, serialize_observations, ObservationFormat};
pub use gaps::{detect_gaps, profile_gaps, DurationClass, GapProfile, GapRecord};
pub use thermo::{convert_dp_rh, Conversion, MAGNUS_A, MAGNUS_B};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObsError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: malformed timestamp {value:?}: {reason}")]
    MalformedTimestamp { line: usize, value: String, reason: String },
    #[error("line {line}: malformed value {value:?}")]
    MalformedValue { line: usize, value: String },
    #[error("duplicate slot {timestamp} for {station_id}/{variable}")]
    DuplicateSlot {
        station_id: String,
        variable: String,
        timestamp: DateTime<Utc>,
    },
    #[error("step must be positive, got {0} s")]
    NonPositiveStep(i64),
    #[error("malformed step {0:?}")]
    MalformedStep(String),
    #[error("unknown variable code {0:?}")]
    UnknownVariableCode(String),
    #[error("unknown timezone {0:?}")]
    UnknownTimezone(String),
    #[error("series must contain at least one slot")]
    EmptySeries,
    #[error("csv: {0}")]
    Csv(String),
    #[error("{quantity} = {value} is outside the physical range")]
    OutOfPhysicalRange { quantity: &'static str, value: f64 },
}

/// Observed quantity carried by a series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum VariableKind {
    /// Air temperature, °C.
    Ta,
    /// Dew point, °C.
    Dp,
    /// Relative humidity, %.
    Rh,
    /// Leaf wetness, fraction in [0, 1].
    Lw,
    Precip,
    WindSpeed,
    GlobalRad,
    SoilT,
    SoilWc,
    Other(String),
}

impl VariableKind {
    pub fn code(&self) -> String {
        match self {
            VariableKind::Ta => "TA".into(),
            VariableKind::Dp => "DP".into(),
            VariableKind::Rh => "RH".into(),
            VariableKind::Lw => "LW".into(),
            VariableKind::Precip => "PRECIP".into(),
            VariableKind::WindSpeed => "WIND_SPEED".into(),
            VariableKind::GlobalRad => "GLOBAL_RAD".into(),
            VariableKind::SoilT => "SOIL_T".into(),
            VariableKind::SoilWc => "SOIL_WC".into(),
            VariableKind::Other(label) => format!("OTHER:{label}"),
        }
    }

    pub fn units(&self) -> &'static str {
        match self {
            VariableKind::Ta | VariableKind::Dp | VariableKind::SoilT => "°C",
            VariableKind::Rh => "%",
            VariableKind::Lw => "1",
            VariableKind::Precip => "mm",
            VariableKind::WindSpeed => "m/s",
            VariableKind::GlobalRad => "W/m²",
            VariableKind::SoilWc => "m³/m³",
            VariableKind::Other(_) => "",
        }
    }

    /// Whether this is one of the controlled codes (everything except `OTHER`).
    pub fn is_controlled(&self) -> bool {
        !matches!(self, VariableKind::Other(_))
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for VariableKind {
    type Err = ObsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let upper = s.to_ascii_uppercase();
        Ok(match upper.as_str() {
            "TA" => VariableKind::Ta,
            "DP" => VariableKind::Dp,
            "RH" => VariableKind::Rh,
            "LW" => VariableKind::Lw,
            "PRECIP" => VariableKind::Precip,
            "WIND_SPEED" => VariableKind::WindSpeed,
            "GLOBAL_RAD" => VariableKind::GlobalRad,
            "SOIL_T" => VariableKind::SoilT,
            "SOIL_WC" => VariableKind::SoilWc,
            _ => match s.split_once(':') {
                Some((prefix, label)) if prefix.eq_ignore_ascii_case("OTHER") && !label.is_empty() => {
                    VariableKind::Other(label.to_string())
                }
                _ => return Err(ObsError::UnknownVariableCode(s.to_string())),
            },
        })
    }
}

impl TryFrom<String> for VariableKind {
    type Error = ObsError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<VariableKind> for String {
    fn from(v: VariableKind) -> Self {
        v.code()
    }
}

/// Sampling interval of a series, in whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step(i64);

impl Step {
    pub const HOURLY: Step = Step(3600);

    pub fn from_secs(secs: i64) -> Result<Self, ObsError> {
        if secs <= 0 {
            return Err(ObsError::NonPositiveStep(secs));
        }
        Ok(Step(secs))
    }

    pub fn secs(self) -> i64 {
        self.0
    }

    pub fn duration(self) -> Duration {
        Duration::seconds(self.0)
    }
}

impl Default for Step {
    fn default() -> Self {
        Step::HOURLY
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// Accepts `3600s`, `60m`, `1h`, `1d` or a bare number of seconds.
impl FromStr for Step {
    type Err = ObsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (num, mult) = match t.chars().last() {
            Some('s') => (&t[..t.len() - 1], 1),
            Some('m') => (&t[..t.len() - 1], 60),
            Some('h') => (&t[..t.len() - 1], 3600),
            Some('d') => (&t[..t.len() - 1], 86_400),
            _ => (t, 1),
        };
        let n: i64 = num.trim().parse().map_err(|_| ObsError::MalformedStep(s.to_string()))?;
        Step::from_secs(n * mult)
    }
}

/// Meteorological season.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Season {
    Djf,
    Mam,
    Jja,
    Son,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Djf, Season::Mam, Season::Jja, Season::Son];

    /// Season of a calendar month (1-12).
    pub fn from_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::Djf,
            3..=5 => Season::Mam,
            6..=8 => Season::Jja,
            _ => Season::Son,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One station-variable series on a fixed time step.
///
/// Slot `i` sits at `start + i * step`; `None` marks a missing slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T = f64> {
    station_id: String,
    variable: VariableKind,
    start: DateTime<Utc>,
    step: Step,
    values: Vec<Option<T>>,
    tz: Tz,
}

impl<T: Copy> TimeSeries<T> {
    pub fn new(
        station_id: impl Into<String>,
        variable: VariableKind,
        start: DateTime<Utc>,
        step: Step,
        values: Vec<Option<T>>,
        tz: Tz,
    ) -> Result<Self, ObsError> {
        if values.is_empty() {
            return Err(ObsError::EmptySeries);
        }
        Ok(Self {
            station_id: station_id.into(),
            variable,
            start,
            step,
            values,
            tz,
        })
    }

    pub fn station_id(&self) -> &str {
        &self.station_id
    }

    pub fn variable(&self) -> &VariableKind {
        &self.variable
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn step(&self) -> Step {
        self.step
    }

    pub fn tz(&self) -> Tz {
        self.tz
    }

    pub fn values(&self) -> &[Option<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a series holds at least one slot.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<T> {
        self.values.get(i).copied().flatten()
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.values[i].is_none()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(self.step.0 * i as i64)
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.len() - 1)
    }

    /// Local wall-clock hour (0-23) of slot `i` in the series timezone.
    pub fn local_hour(&self, i: usize) -> u32 {
        self.timestamp(i).with_timezone(&self.tz).hour()
    }

    /// Local calendar month (1-12) of slot `i`.
    pub fn local_month(&self, i: usize) -> u32 {
        self.timestamp(i).with_timezone(&self.tz).month()
    }

    pub fn local_season(&self, i: usize) -> Season {
        Season::from_month(self.local_month(i))
    }

    /// Index of the slot at exactly `t`, if `t` lies on this series' grid and within range.
    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let offset = (t - self.start).num_seconds();
        if offset < 0 || offset % self.step.0 != 0 {
            return None;
        }
        let i = (offset / self.step.0) as usize;
        (i < self.len()).then_some(i)
    }

    /// Value at timestamp `t`, `None` if off-grid, out of range or missing.
    pub fn value_at(&self, t: DateTime<Utc>) -> Option<T> {
        self.index_of(t).and_then(|i| self.values[i])
    }

    /// Whether `other` uses the same step and its grid is phase-aligned with ours.
    pub fn grid_aligned<U: Copy>(&self, other: &TimeSeries<U>) -> bool {
        self.step == other.step && (other.start - self.start).num_seconds() % self.step.0 == 0
    }

    /// Same metadata, replacement values (must keep the length).
    pub fn with_values(&self, values: Vec<Option<T>>) -> Self {
        assert_eq!(values.len(), self.values.len(), "length must be preserved");
        Self { values, ..self.clone() }
    }

    pub fn with_station_id(mut self, station_id: impl Into<String>) -> Self {
        self.station_id = station_id.into();
        self
    }

    pub fn with_tz(mut self, tz: Tz) -> Self {
        self.tz = tz;
        self
    }
}
