use std::collections::BTreeMap;

use serde::Deserialize;

use super::{QcCheck, QcError};
use crate::obs::VariableKind;

/// Thresholds and toggles for the QC pipeline. Loaded from a TOML key-value
/// file; every key is optional and falls back to the defaults below.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcConfig {
    /// Plausible `[min, max]` per variable code.
    pub range: BTreeMap<String, [f64; 2]>,
    /// Largest allowed change between consecutive slots, per variable code.
    pub max_step: BTreeMap<String, f64>,
    pub persistence_k: usize,
    /// Variables allowed to sit at one value (e.g. zero rain).
    pub persistence_exempt: Vec<String>,
    pub spike_threshold: f64,
    pub spatial_m: f64,
    pub shift_max_lag: usize,
    pub shift_min_gain: f64,
    pub climatology_sigma: f64,
    pub climatology_min_days: f64,
    pub checks: CheckToggles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckToggles {
    pub range: bool,
    pub climatology: bool,
    pub step: bool,
    pub persistence: bool,
    pub spike: bool,
    pub spatial: bool,
    pub time_shift: bool,
}

impl Default for CheckToggles {
    fn default() -> Self {
        Self {
            range: true,
            climatology: true,
            step: true,
            persistence: true,
            spike: true,
            spatial: true,
            time_shift: true,
        }
    }
}

impl CheckToggles {
    pub fn enabled(&self, check: QcCheck) -> bool {
        match check {
            QcCheck::Range => self.range,
            QcCheck::Climatology => self.climatology,
            QcCheck::Step => self.step,
            QcCheck::Persistence => self.persistence,
            QcCheck::Spike => self.spike,
            QcCheck::Spatial => self.spatial,
            QcCheck::TimeShift => self.time_shift,
        }
    }

    pub fn set(&mut self, check: QcCheck, on: bool) {
        let slot = match check {
            QcCheck::Range => &mut self.range,
            QcCheck::Climatology => &mut self.climatology,
            QcCheck::Step => &mut self.step,
            QcCheck::Persistence => &mut self.persistence,
            QcCheck::Spike => &mut self.spike,
            QcCheck::Spatial => &mut self.spatial,
            QcCheck::TimeShift => &mut self.time_shift,
        };
        *slot = on;
    }
}

impl Default for QcConfig {
    fn default() -> Self {
        let range = [
            ("TA", [-60.0, 60.0]),
            ("DP", [-60.0, 60.0]),
            ("RH", [0.0, 100.0]),
            ("LW", [0.0, 1.0]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let max_step = [("TA", 6.0), ("DP", 6.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Self {
            range,
            max_step,
            persistence_k: 6,
            persistence_exempt: vec!["PRECIP".into(), "LW".into()],
            spike_threshold: 3.0,
            spatial_m: 5.0,
            shift_max_lag: 12,
            shift_min_gain: 0.05,
            climatology_sigma: 4.0,
            climatology_min_days: 60.0,
            checks: CheckToggles::default(),
        }
    }
}

impl QcConfig {
    pub fn from_toml(text: &str) -> Result<Self, QcError> {
        let mut cfg: QcConfig = toml::from_str(text).map_err(|e| QcError::InvalidConfig(e.to_string()))?;
        // Per-variable tables extend the defaults rather than replacing them.
        let defaults = QcConfig::default();
        let mut range = defaults.range;
        range.extend(std::mem::take(&mut cfg.range));
        cfg.range = range;
        let mut max_step = defaults.max_step;
        max_step.extend(std::mem::take(&mut cfg.max_step));
        cfg.max_step = max_step;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), QcError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(QcError::InvalidConfig(format!(
                    "{name} must be finite and positive, got {v}"
                )))
            }
        };
        positive("spike_threshold", self.spike_threshold)?;
        positive("spatial_m", self.spatial_m)?;
        positive("shift_min_gain", self.shift_min_gain)?;
        positive("climatology_sigma", self.climatology_sigma)?;
        positive("climatology_min_days", self.climatology_min_days)?;
        if self.persistence_k < 2 {
            return Err(QcError::InvalidConfig("persistence_k must be at least 2".into()));
        }
        if self.shift_max_lag == 0 {
            return Err(QcError::InvalidConfig("shift_max_lag must be positive".into()));
        }
        for (code, v) in &self.max_step {
            positive(&format!("max_step.{code}"), *v)?;
        }
        for (code, [lo, hi]) in &self.range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(QcError::InvalidConfig(format!("range.{code} must satisfy min < max")));
            }
        }
        Ok(())
    }

    pub fn range_for(&self, v: &VariableKind) -> Option<(f64, f64)> {
        self.range.get(&v.code()).map(|r| (r[0], r[1]))
    }

    pub fn max_step_for(&self, v: &VariableKind) -> Option<f64> {
        self.max_step.get(&v.code()).copied()
    }

    pub fn persistence_exempt(&self, v: &VariableKind) -> bool {
        let code = v.code();
        self.persistence_exempt.iter().any(|c| c.eq_ignore_ascii_case(&code))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = QcConfig::from_toml("persistence_k = 8\n[range]\nTA = [-40.0, 50.0]\n[checks]\ntime_shift = false\n")
            .unwrap();
        assert_eq!(cfg.persistence_k, 8);
        assert_eq!(cfg.range_for(&VariableKind::Ta), Some((-40.0, 50.0)));
        assert_eq!(cfg.range_for(&VariableKind::Rh), Some((0.0, 100.0)));
        assert!(!cfg.checks.time_shift);
        assert!(cfg.checks.spike);
        assert_eq!(cfg.spike_threshold, 3.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(QcConfig::from_toml("spike_threshold = -1.0").is_err());
        assert!(QcConfig::from_toml("spatial_m = nan").is_err());
        assert!(QcConfig::from_toml("[range]\nTA = [5.0, 1.0]").is_err());
        assert!(QcConfig::from_toml("bogus = 1").is_err());
    }
}
