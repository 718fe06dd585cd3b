use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use chrono::NaiveDate;
use fairmet_core::obs::VariableKind;
use serde::Serialize;

use crate::model::{slug, NetworkRecord, Record, SensorRecord, SiteRecord};
use crate::store::Catalog;
use crate::CatalogError;

pub const INVENTORY_HEADER: [&str; 14] = [
    "network_name",
    "country",
    "city",
    "n_stations",
    "environment",
    "seasonality",
    "variables",
    "frequency_seconds",
    "active_from",
    "active_to",
    "data_format",
    "contact",
    "license",
    "dataset_link",
];

pub const SITES_HEADER: [&str; 8] = [
    "id",
    "network_id",
    "name",
    "latitude",
    "longitude",
    "altitude_m",
    "timezone",
    "macroscale_environment",
];

pub const SENSORS_HEADER: [&str; 9] = [
    "id",
    "site_id",
    "variable",
    "units",
    "mounting_height_m",
    "instrument_model",
    "stated_accuracy",
    "sampling_interval_s",
    "wmo_attributes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportKind {
    Networks,
    Sites,
    Sensors,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    /// 1-based data row, header excluded.
    pub row: usize,
    pub code: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportReport {
    pub kind: ImportKind,
    pub imported: usize,
    pub ids: Vec<String>,
    pub errors: Vec<RowError>,
}

struct Row<'a> {
    cols: &'a HashMap<&'static str, usize>,
    rec: &'a csv::StringRecord,
}

impl Row<'_> {
    fn get(&self, name: &str) -> &str {
        self.cols.get(name).and_then(|&i| self.rec.get(i)).unwrap_or("").trim()
    }

    fn parse<T: std::str::FromStr>(&self, name: &str) -> Result<T, CatalogError> {
        self.get(name)
            .parse()
            .map_err(|_| CatalogError::InvalidRecord(format!("{name}: cannot parse {:?}", self.get(name))))
    }

    fn opt<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, CatalogError> {
        if self.get(name).is_empty() {
            Ok(None)
        } else {
            self.parse(name).map(Some)
        }
    }

    fn date(&self, name: &str) -> Result<Option<NaiveDate>, CatalogError> {
        let s = self.get(name);
        if s.is_empty() {
            return Ok(None);
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Some)
            .map_err(|_| CatalogError::InvalidRecord(format!("{name}: expected YYYY-MM-DD, got {s:?}")))
    }
}

fn variable_list(s: &str) -> Result<Vec<VariableKind>, CatalogError> {
    s.split([';', '|'])
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| CatalogError::VocabularyViolation(format!("variable {v:?}")))
        })
        .collect()
}

fn network_row(r: &Row<'_>) -> Result<NetworkRecord, CatalogError> {
    let name = r.get("network_name").to_string();
    let n = NetworkRecord {
        id: slug(&name),
        name,
        country: r.get("country").into(),
        city_or_region: r.get("city").into(),
        local_environment: r.get("environment").parse()?,
        seasonality: r.get("seasonality").parse()?,
        dataset_link: r.get("dataset_link").into(),
        station_count: r.parse("n_stations")?,
        measured_variables: variable_list(r.get("variables"))?,
        measurement_frequency_s: r.parse("frequency_seconds")?,
        active_from: r.date("active_from")?,
        active_to: r.date("active_to")?,
        data_format: r.get("data_format").into(),
        contact: r.get("contact").into(),
        license: r.get("license").into(),
    };
    Ok(n)
}

fn site_row(r: &Row<'_>) -> Result<SiteRecord, CatalogError> {
    Ok(SiteRecord {
        id: r.get("id").into(),
        network_id: r.get("network_id").into(),
        name: r.get("name").into(),
        latitude: r.parse("latitude")?,
        longitude: r.parse("longitude")?,
        altitude_m: r.opt("altitude_m")?,
        timezone: r.get("timezone").into(),
        macroscale_environment: r.get("macroscale_environment").into(),
    })
}

/// `key=value` pairs separated by `;`.
fn attribute_map(s: &str) -> Result<BTreeMap<String, String>, CatalogError> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| match p.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(CatalogError::InvalidRecord(format!("attribute {p:?} is not key=value"))),
        })
        .collect()
}

fn sensor_row(r: &Row<'_>) -> Result<SensorRecord, CatalogError> {
    let v = r.get("variable");
    Ok(SensorRecord {
        id: r.get("id").into(),
        site_id: r.get("site_id").into(),
        variable: v
            .parse()
            .map_err(|_| CatalogError::VocabularyViolation(format!("variable {v:?}")))?,
        units: r.get("units").into(),
        mounting_height_m: r.opt("mounting_height_m")?,
        instrument_model: r.get("instrument_model").into(),
        stated_accuracy: r.get("stated_accuracy").into(),
        sampling_interval_s: r.parse("sampling_interval_s")?,
        wmo_attributes: attribute_map(r.get("wmo_attributes"))?,
    })
}

fn detect(header: &csv::StringRecord) -> Result<(ImportKind, HashMap<&'static str, usize>), CatalogError> {
    let names: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let candidates: [(ImportKind, &[&'static str]); 3] = [
        (ImportKind::Networks, &INVENTORY_HEADER),
        (ImportKind::Sites, &SITES_HEADER),
        (ImportKind::Sensors, &SENSORS_HEADER),
    ];
    for (kind, required) in candidates {
        let cols: HashMap<&'static str, usize> = required
            .iter()
            .filter_map(|&c| names.iter().position(|n| n == c).map(|i| (c, i)))
            .collect();
        if cols.len() == required.len() {
            return Ok((kind, cols));
        }
    }
    let missing: Vec<&str> = INVENTORY_HEADER
        .iter()
        .filter(|c| !names.iter().any(|n| n == *c))
        .copied()
        .collect();
    Err(CatalogError::MalformedHeader(format!(
        "not an inventory, sites or sensors file; inventory columns missing: {}",
        missing.join(",")
    )))
}

/// Import a CSV of networks (inventory), sites or sensors, chosen by its
/// header. Extra columns are ignored. Each row is stored on its own; a bad
/// row is reported and skipped without affecting the others.
pub fn import_csv(catalog: &Catalog, input: impl Read) -> Result<ImportReport, CatalogError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| CatalogError::MalformedHeader(e.to_string()))?
        .clone();
    let (kind, cols) = detect(&header)?;
    let mut report = ImportReport {
        kind,
        imported: 0,
        ids: Vec::new(),
        errors: Vec::new(),
    };
    for (k, rec) in rdr.records().enumerate() {
        let row_no = k + 1;
        let outcome = rec
            .map_err(|e| CatalogError::InvalidRecord(e.to_string()))
            .and_then(|rec| {
                let row = Row { cols: &cols, rec: &rec };
                let record = match kind {
                    ImportKind::Networks => Record::Network(network_row(&row)?),
                    ImportKind::Sites => Record::Site(site_row(&row)?),
                    ImportKind::Sensors => Record::Sensor(sensor_row(&row)?),
                };
                catalog.upsert(record)
            });
        match outcome {
            Ok(id) => {
                report.imported += 1;
                report.ids.push(id);
            }
            Err(e) => report.errors.push(RowError {
                row: row_no,
                code: e.code(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(report)
}

/// Import a network inventory; any other header is rejected.
pub fn import_inventory(catalog: &Catalog, input: impl Read) -> Result<ImportReport, CatalogError> {
    let mut buf = Vec::new();
    let mut input = input;
    input
        .read_to_end(&mut buf)
        .map_err(|e| CatalogError::Io(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(buf.as_slice());
    let header = rdr
        .headers()
        .map_err(|e| CatalogError::MalformedHeader(e.to_string()))?
        .clone();
    match detect(&header) {
        Ok((ImportKind::Networks, _)) => import_csv(catalog, buf.as_slice()),
        Ok(_) | Err(_) => {
            let names: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
            let missing: Vec<&str> = INVENTORY_HEADER
                .iter()
                .filter(|c| !names.iter().any(|n| n == *c))
                .copied()
                .collect();
            Err(CatalogError::MalformedHeader(format!(
                "inventory columns missing: {}",
                missing.join(",")
            )))
        }
    }
}
