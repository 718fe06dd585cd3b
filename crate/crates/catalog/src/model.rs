use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use fairmet_core::obs::VariableKind;
use serde::{Deserialize, Serialize};

use crate::CatalogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocalEnvironment {
    Urban,
    Rural,
    UrbanAndRural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Seasonality {
    YearRound,
    Summer,
}

/// Uppercase, with `&` spelled out and blanks as underscores, so that both
/// `URBAN_AND_RURAL` and `Urban & Rural` normalize to the same token.
fn vocabulary_token(s: &str) -> String {
    s.trim()
        .to_ascii_uppercase()
        .replace('&', " AND ")
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

impl LocalEnvironment {
    pub const ALL: [LocalEnvironment; 3] = [
        LocalEnvironment::Urban,
        LocalEnvironment::Rural,
        LocalEnvironment::UrbanAndRural,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LocalEnvironment::Urban => "URBAN",
            LocalEnvironment::Rural => "RURAL",
            LocalEnvironment::UrbanAndRural => "URBAN_AND_RURAL",
        }
    }
}

impl Seasonality {
    pub const ALL: [Seasonality; 2] = [Seasonality::YearRound, Seasonality::Summer];

    pub fn code(self) -> &'static str {
        match self {
            Seasonality::YearRound => "YEAR_ROUND",
            Seasonality::Summer => "SUMMER",
        }
    }
}

impl fmt::Display for LocalEnvironment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for Seasonality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LocalEnvironment {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = vocabulary_token(s);
        Self::ALL
            .into_iter()
            .find(|e| e.code() == t)
            .ok_or_else(|| CatalogError::VocabularyViolation(format!("local environment {s:?}")))
    }
}

impl FromStr for Seasonality {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = vocabulary_token(s);
        Self::ALL
            .into_iter()
            .find(|e| e.code() == t)
            .ok_or_else(|| CatalogError::VocabularyViolation(format!("seasonality {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkRecord {
    pub id: String,
    pub name: String,
    pub country: String,
    #[serde(default)]
    pub city_or_region: String,
    pub local_environment: LocalEnvironment,
    pub seasonality: Seasonality,
    /// Persistent identifier URL of the dataset; empty when none is known.
    #[serde(default)]
    pub dataset_link: String,
    #[serde(default)]
    pub station_count: u32,
    #[serde(default)]
    pub measured_variables: Vec<VariableKind>,
    /// Seconds between records.
    pub measurement_frequency_s: u64,
    #[serde(default)]
    pub active_from: Option<NaiveDate>,
    /// `None` while the network is still running.
    #[serde(default)]
    pub active_to: Option<NaiveDate>,
    #[serde(default)]
    pub data_format: String,
    #[serde(default)]
    pub contact: String,
    #[serde(default)]
    pub license: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteRecord {
    pub id: String,
    pub network_id: String,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub altitude_m: Option<f64>,
    /// IANA zone name.
    pub timezone: String,
    #[serde(default)]
    pub macroscale_environment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorRecord {
    pub id: String,
    pub site_id: String,
    pub variable: VariableKind,
    #[serde(default)]
    pub units: String,
    /// Negative below the surface.
    #[serde(default)]
    pub mounting_height_m: Option<f64>,
    #[serde(default)]
    pub instrument_model: String,
    #[serde(default)]
    pub stated_accuracy: String,
    pub sampling_interval_s: u64,
    #[serde(default)]
    pub wmo_attributes: BTreeMap<String, String>,
}

/// Keys accepted in a sensor's WMO attribute map, after the WIGOS metadata
/// categories for instruments and their exposure.
pub const WMO_KEYS: [&str; 16] = [
    "observed_variable",
    "measurement_unit",
    "instrument_make",
    "instrument_model",
    "measurement_method",
    "sensor_height",
    "exposure",
    "siting_classification",
    "shielding",
    "ventilation",
    "sampling_interval",
    "reporting_interval",
    "measurement_uncertainty",
    "calibration_date",
    "maintenance_interval",
    "surface_cover",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "lowercase")]
pub enum Record {
    Network(NetworkRecord),
    Site(SiteRecord),
    Sensor(SensorRecord),
}

impl Record {
    pub fn id(&self) -> &str {
        match self {
            Record::Network(r) => &r.id,
            Record::Site(r) => &r.id,
            Record::Sensor(r) => &r.id,
        }
    }
}

fn require(field: &str, value: &str) -> Result<(), CatalogError> {
    if value.trim().is_empty() {
        Err(CatalogError::InvalidRecord(format!("{field} must not be empty")))
    } else {
        Ok(())
    }
}

impl NetworkRecord {
    /// Checks that need no other record.
    pub fn validate(&self) -> Result<(), CatalogError> {
        require("id", &self.id)?;
        require("name", &self.name)?;
        require("country", &self.country)?;
        if self.measurement_frequency_s == 0 {
            return Err(CatalogError::InvalidRecord(
                "measurement frequency must be positive".into(),
            ));
        }
        if let (Some(a), Some(b)) = (self.active_from, self.active_to) {
            if a > b {
                return Err(CatalogError::InvalidRecord(format!(
                    "active_from {a} is after active_to {b}"
                )));
            }
        }
        Ok(())
    }
}

impl SiteRecord {
    pub fn validate(&self) -> Result<(), CatalogError> {
        require("id", &self.id)?;
        require("name", &self.name)?;
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(CatalogError::CoordinateOutOfRange(format!(
                "latitude {}",
                self.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(CatalogError::CoordinateOutOfRange(format!(
                "longitude {}",
                self.longitude
            )));
        }
        if self.timezone.parse::<chrono_tz::Tz>().is_err() {
            return Err(CatalogError::InvalidRecord(format!(
                "unknown time zone {:?}",
                self.timezone
            )));
        }
        Ok(())
    }
}

impl SensorRecord {
    pub fn validate(&self) -> Result<(), CatalogError> {
        require("id", &self.id)?;
        if self.sampling_interval_s == 0 {
            return Err(CatalogError::InvalidRecord("sampling interval must be positive".into()));
        }
        Ok(())
    }

    pub fn uses_wmo_keys(&self) -> bool {
        !self.wmo_attributes.is_empty() && self.wmo_attributes.keys().all(|k| WMO_KEYS.contains(&k.as_str()))
    }
}

/// Conjunctive facet filter; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchQuery {
    pub country: Option<String>,
    pub city: Option<String>,
    pub local_environment: Option<LocalEnvironment>,
    pub seasonality: Option<Seasonality>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl SearchQuery {
    pub fn validate(&self) -> Result<(), CatalogError> {
        match (self.from, self.to) {
            (Some(a), Some(b)) if a > b => Err(CatalogError::InvalidDateRange { from: a, to: b }),
            _ => Ok(()),
        }
    }

    pub fn matches(&self, n: &NetworkRecord) -> bool {
        let text = |want: &Option<String>, have: &str| {
            want.as_ref()
                .is_none_or(|w| w.trim().to_lowercase() == have.trim().to_lowercase())
        };
        if !text(&self.country, &n.country) || !text(&self.city, &n.city_or_region) {
            return false;
        }
        if self.local_environment.is_some_and(|e| e != n.local_environment)
            || self.seasonality.is_some_and(|s| s != n.seasonality)
        {
            return false;
        }
        if self.from.is_none() && self.to.is_none() {
            return true;
        }
        // Networks without a start date cannot be placed in time.
        let Some(start) = n.active_from else { return false };
        self.to.is_none_or(|to| start <= to) && self.from.is_none_or(|from| n.active_to.is_none_or(|end| end >= from))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FairChecklist {
    pub findable: bool,
    pub accessible: bool,
    pub interoperable: bool,
    pub reusable: bool,
    pub score: u8,
}

impl FairChecklist {
    /// Pure function of stored metadata; links are inspected, never fetched.
    pub fn evaluate(n: &NetworkRecord, sensors: &[&SensorRecord]) -> Self {
        let has = |s: &str| !s.trim().is_empty();
        let link = n.dataset_link.trim().to_ascii_lowercase();
        let findable = has(&n.dataset_link) && has(&n.name) && has(&n.country);
        let accessible = (link.starts_with("http://") || link.starts_with("https://")) && has(&n.license);
        let interoperable =
            !sensors.is_empty() && sensors.iter().all(|s| s.variable.is_controlled() && s.uses_wmo_keys());
        let reusable = has(&n.license) && has(&n.contact) && n.active_from.is_some();
        let score = [findable, accessible, interoperable, reusable]
            .iter()
            .filter(|&&b| b)
            .count() as u8;
        Self {
            findable,
            accessible,
            interoperable,
            reusable,
            score,
        }
    }
}

/// Lowercase ASCII slug: runs of anything but letters and digits become `-`.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_spellings() {
        assert_eq!(
            "URBAN & RURAL".parse::<LocalEnvironment>().unwrap(),
            LocalEnvironment::UrbanAndRural
        );
        assert_eq!(
            "urban_and_rural".parse::<LocalEnvironment>().unwrap(),
            LocalEnvironment::UrbanAndRural
        );
        assert_eq!("Year Round".parse::<Seasonality>().unwrap(), Seasonality::YearRound);
        assert!(matches!(
            "SUBURBAN".parse::<LocalEnvironment>(),
            Err(CatalogError::VocabularyViolation(_))
        ));
        assert!("WINTER".parse::<Seasonality>().is_err());
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Novi Sad Urban Network (NSUNET)"), "novi-sad-urban-network-nsunet");
        assert_eq!(slug("  --A b--"), "a-b");
    }
}
