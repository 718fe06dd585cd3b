use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use chrono_tz::Tz;

use super::{ObsError, Step, TimeSeries, VariableKind};
use crate::scalar::Scalar;

pub const OBS_HEADER: [&str; 4] = ["timestamp", "station_id", "variable", "value"];

/// Declared properties of an observation file that are not in its rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationFormat {
    pub step: Step,
    pub tz: Tz,
}

impl Default for ObservationFormat {
    fn default() -> Self {
        Self {
            step: Step::HOURLY,
            tz: Tz::UTC,
        }
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, ObsError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| ObsError::MalformedHeader(format!("missing column {name:?}")))
}

/// Snap a timestamp (ms since epoch) to the epoch-anchored grid of `step`.
/// Offsets strictly under half a step snap; an exact half-step tie is rejected.
fn snap(ms: i64, step: Step) -> Result<i64, String> {
    let step_ms = step.secs() * 1000;
    let rem = ms.rem_euclid(step_ms);
    let base = ms - rem;
    if rem * 2 < step_ms {
        Ok(base)
    } else if rem * 2 > step_ms {
        Ok(base + step_ms)
    } else {
        Err(format!("equidistant between two {step} slots"))
    }
}

/// Parse the long-format observation CSV into one series per (station, variable).
///
/// Series come back ordered by station id, then variable code.
pub fn parse_observations<T: Scalar>(bytes: &[u8], format: ObservationFormat) -> Result<Vec<TimeSeries<T>>, ObsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| ObsError::MalformedHeader(e.to_string()))?
        .clone();
    let (c_ts, c_st, c_var, c_val) = (
        column(&headers, OBS_HEADER[0])?,
        column(&headers, OBS_HEADER[1])?,
        column(&headers, OBS_HEADER[2])?,
        column(&headers, OBS_HEADER[3])?,
    );

    let mut groups: BTreeMap<(String, String), (VariableKind, BTreeMap<i64, Option<T>>)> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| ObsError::Csv(e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let ts_raw = field(c_ts);
        let ts = DateTime::parse_from_rfc3339(ts_raw).map_err(|e| ObsError::MalformedTimestamp {
            line,
            value: ts_raw.to_string(),
            reason: e.to_string(),
        })?;
        let slot = snap(ts.timestamp_millis(), format.step).map_err(|reason| ObsError::MalformedTimestamp {
            line,
            value: ts_raw.to_string(),
            reason,
        })?;
        let variable: VariableKind = field(c_var).parse()?;
        let raw = field(c_val);
        let value = if raw.is_empty() || raw.eq_ignore_ascii_case("NA") {
            None
        } else {
            Some(raw.parse::<T>().map_err(|_| ObsError::MalformedValue {
                line,
                value: raw.to_string(),
            })?)
        };
        let station = field(c_st).to_string();
        let entry = groups
            .entry((station.clone(), variable.code()))
            .or_insert_with(|| (variable.clone(), BTreeMap::new()));
        if entry.1.insert(slot, value).is_some() {
            return Err(ObsError::DuplicateSlot {
                station_id: station,
                variable: variable.code(),
                timestamp: Utc.timestamp_millis_opt(slot).single().unwrap_or_default(),
            });
        }
    }

    let step_ms = format.step.secs() * 1000;
    groups
        .into_iter()
        .map(|((station, _), (variable, slots))| {
            let first = *slots.keys().next().expect("group has at least one row");
            let last = *slots.keys().next_back().expect("group has at least one row");
            let len = ((last - first) / step_ms) as usize + 1;
            let mut values = vec![None; len];
            for (ms, v) in slots {
                values[((ms - first) / step_ms) as usize] = v;
            }
            let start = Utc
                .timestamp_millis_opt(first)
                .single()
                .ok_or_else(|| ObsError::MalformedTimestamp {
                    line: 0,
                    value: first.to_string(),
                    reason: "out of range".into(),
                })?;
            TimeSeries::new(station, variable, start, format.step, values, format.tz)
        })
        .collect()
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Write series in the canonical long format: every slot one row, missing as an empty field.
pub fn serialize_observations<T: Scalar>(series: &[TimeSeries<T>]) -> String {
    let mut out = String::from("timestamp,station_id,variable,value\n");
    for s in series {
        let code = s.variable().code();
        for (i, v) in s.values().iter().enumerate() {
            out.push_str(&format_timestamp(s.timestamp(i)));
            out.push(',');
            out.push_str(&csv_field(s.station_id()));
            out.push(',');
            out.push_str(&code);
            out.push(',');
            if let Some(v) = v {
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
    }
    out
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
