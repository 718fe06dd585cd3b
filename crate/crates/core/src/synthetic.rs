//! Synthetic station network for tests and benchmarks.
//!
//! Air temperature at station `s`, slot `t` (local solar hour `h`, day of year `d`):
//!
//! ```text
//! TA(s, t) = mean + offset[s]
//!          + seasonal_amp · sin(2π (d − 105) / 365)
//!          + diurnal_amp  · sin(2π (h − 9) / 24)
//!          + R(t) + E[s](t)
//! ```
//!
//! `R` is a regional AR(1) process shared by all stations and `E[s]` an
//! independent AR(1) process per station. `offset[s]` is drawn once per
//! station. Dew point is `TA − D(s, t)` with a positive depression `D` that
//! follows the diurnal cycle plus its own AR(1) noise; relative humidity
//! follows from the Magnus relation and leaf wetness is a logistic function
//! of relative humidity.
//!
//! One reanalysis cell covers the network. It sees the seasonal cycle, a
//! damped diurnal cycle, the regional process and a fixed warm bias, plus white
//! noise; station-level noise and offsets are invisible to it.

use std::f64::consts::TAU;

use chrono::{DateTime, Datelike, TimeZone, Timelike, Utc};

use crate::obs::{convert_dp_rh, Conversion, Step, TimeSeries, VariableKind};
use crate::rng::{derive_seed, SplitMix64};
use crate::scalar::Scalar;

pub const REANALYSIS_CELL: &str = "REANALYSIS:cell-1";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub stations: usize,
    pub days: usize,
    pub start: DateTime<Utc>,
    pub seed: u64,
    pub mean: f64,
    pub seasonal_amp: f64,
    pub diurnal_amp: f64,
    pub regional_phi: f64,
    pub regional_sigma: f64,
    pub station_phi: f64,
    pub station_sigma: f64,
    pub offset_sigma: f64,
    pub reanalysis_bias: f64,
    pub reanalysis_diurnal_damping: f64,
    pub reanalysis_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            stations: 4,
            days: 180,
            start: Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap(),
            seed: 1,
            mean: 12.0,
            seasonal_amp: 8.0,
            diurnal_amp: 5.0,
            regional_phi: 0.97,
            regional_sigma: 0.5,
            station_phi: 0.9,
            station_sigma: 0.3,
            offset_sigma: 1.5,
            reanalysis_bias: 1.0,
            reanalysis_diurnal_damping: 0.7,
            reanalysis_noise: 0.3,
        }
    }
}

impl SyntheticConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn station_id(k: usize) -> String {
        format!("SYN-{:02}", k + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticNetwork<T> {
    /// TA, DP, RH and LW for every station, station-major.
    pub stations: Vec<TimeSeries<T>>,
    /// TA, DP, RH and LW for the single reanalysis cell.
    pub reanalysis: Vec<TimeSeries<T>>,
}

impl<T: Scalar> SyntheticNetwork<T> {
    pub fn series(&self, station: &str, variable: &VariableKind) -> Option<&TimeSeries<T>> {
        self.stations
            .iter()
            .find(|s| s.station_id() == station && s.variable() == variable)
    }

    pub fn reanalysis_for(&self, variable: &VariableKind) -> Option<&TimeSeries<T>> {
        self.reanalysis.iter().find(|s| s.variable() == variable)
    }
}

fn ar1(n: usize, phi: f64, sigma: f64, rng: &mut SplitMix64) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = phi * x + sigma * rng.next_gaussian();
            x
        })
        .collect()
}

struct Derived {
    ta: Vec<f64>,
    dp: Vec<f64>,
    rh: Vec<f64>,
    lw: Vec<f64>,
}

fn derive_moisture(ta: Vec<f64>, depression: &[f64]) -> Derived {
    let dp: Vec<f64> = ta.iter().zip(depression).map(|(t, d)| t - d).collect();
    let rh: Vec<f64> = ta
        .iter()
        .zip(&dp)
        .map(|(&t, &d)| convert_dp_rh(t, d, Conversion::DpToRh).unwrap_or(100.0).min(100.0))
        .collect();
    let lw = rh.iter().map(|r| 1.0 / (1.0 + (-(r - 90.0) / 3.0).exp())).collect();
    Derived { ta, dp, rh, lw }
}

fn to_series<T: Scalar>(id: &str, variable: VariableKind, start: DateTime<Utc>, values: &[f64]) -> TimeSeries<T> {
    TimeSeries::new(
        id,
        variable,
        start,
        Step::HOURLY,
        values.iter().map(|&v| Some(T::lit(v))).collect(),
        chrono_tz::UTC,
    )
    .expect("non-empty synthetic series")
}

fn push_all<T: Scalar>(out: &mut Vec<TimeSeries<T>>, id: &str, start: DateTime<Utc>, d: &Derived) {
    out.push(to_series(id, VariableKind::Ta, start, &d.ta));
    out.push(to_series(id, VariableKind::Dp, start, &d.dp));
    out.push(to_series(id, VariableKind::Rh, start, &d.rh));
    out.push(to_series(id, VariableKind::Lw, start, &d.lw));
}

/// Generate hourly, gap-free series for `config.stations` stations.
pub fn generate<T: Scalar>(config: &SyntheticConfig) -> SyntheticNetwork<T> {
    let n = config.days * 24;
    let mut rng = SplitMix64::new(derive_seed(config.seed, 0));
    let regional = ar1(n, config.regional_phi, config.regional_sigma, &mut rng);
    let regional_moist = ar1(n, 0.95, 0.4, &mut rng);

    let cycles: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = config.start + chrono::Duration::hours(i as i64);
            let d = t.ordinal0() as f64;
            let h = t.hour() as f64;
            (
                config.seasonal_amp * (TAU * (d - 105.0) / 365.0).sin(),
                (TAU * (h - 9.0) / 24.0).sin(),
            )
        })
        .collect();

    let mut stations = Vec::with_capacity(config.stations * 4);
    for k in 0..config.stations {
        let mut srng = SplitMix64::new(derive_seed(config.seed, 1 + k as u64));
        let offset = config.offset_sigma * srng.next_gaussian();
        let own = ar1(n, config.station_phi, config.station_sigma, &mut srng);
        let own_moist = ar1(n, 0.9, 0.3, &mut srng);
        let ta: Vec<f64> = (0..n)
            .map(|i| config.mean + offset + cycles[i].0 + config.diurnal_amp * cycles[i].1 + regional[i] + own[i])
            .collect();
        let depression: Vec<f64> = (0..n)
            .map(|i| (4.0 + 2.5 * cycles[i].1 + regional_moist[i] + own_moist[i]).max(0.05))
            .collect();
        push_all(
            &mut stations,
            &SyntheticConfig::station_id(k),
            config.start,
            &derive_moisture(ta, &depression),
        );
    }

    let mut rrng = SplitMix64::new(derive_seed(config.seed, u64::MAX));
    let ta: Vec<f64> = (0..n)
        .map(|i| {
            config.mean
                + config.reanalysis_bias
                + cycles[i].0
                + config.reanalysis_diurnal_damping * config.diurnal_amp * cycles[i].1
                + regional[i]
                + config.reanalysis_noise * rrng.next_gaussian()
        })
        .collect();
    let depression: Vec<f64> = (0..n)
        .map(|i| (4.0 + 1.5 * cycles[i].1 + regional_moist[i] + 0.2 * rrng.next_gaussian()).max(0.05))
        .collect();
    let mut reanalysis = Vec::with_capacity(4);
    push_all(
        &mut reanalysis,
        REANALYSIS_CELL,
        config.start,
        &derive_moisture(ta, &depression),
    );

    SyntheticNetwork { stations, reanalysis }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_ranges() {
        let net: SyntheticNetwork<f64> = generate(&SyntheticConfig {
            days: 30,
            ..Default::default()
        });
        assert_eq!(net.stations.len(), 16);
        assert_eq!(net.reanalysis.len(), 4);
        for s in net.stations.iter().chain(&net.reanalysis) {
            assert_eq!(s.len(), 720);
            assert_eq!(s.missing_count(), 0);
        }
        let rh = net.series("SYN-02", &VariableKind::Rh).unwrap();
        assert!(rh.values().iter().flatten().all(|&v| v > 0.0 && v <= 100.0));
        let lw = net.series("SYN-02", &VariableKind::Lw).unwrap();
        assert!(lw.values().iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        let ta = net.series("SYN-01", &VariableKind::Ta).unwrap();
        let dp = net.series("SYN-01", &VariableKind::Dp).unwrap();
        assert!(ta
            .values()
            .iter()
            .zip(dp.values())
            .all(|(t, d)| d.unwrap() < t.unwrap()));
    }

    #[test]
    fn seeded() {
        let a: SyntheticNetwork<f64> = generate(&SyntheticConfig::with_seed(3));
        let b: SyntheticNetwork<f64> = generate(&SyntheticConfig::with_seed(3));
        let c: SyntheticNetwork<f64> = generate(&SyntheticConfig::with_seed(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
