//! Network / site / sensor metadata catalog: durable store, faceted search,
//! distribution statistics, inventory import, FAIR checklist and a REST API.

pub mod api;
pub mod import;
pub mod model;
pub mod store;

use chrono::NaiveDate;
use thiserror::Error;

pub use import::{import_csv, import_inventory, ImportKind, ImportReport, INVENTORY_HEADER};
pub use model::{
    FairChecklist, LocalEnvironment, NetworkRecord, Record, SearchQuery, Seasonality, SensorRecord, SiteRecord,
};
pub use store::{Catalog, GroupBy, NetworkDetail, SiteDetail, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("parent {kind} {id:?} does not exist")]
    UnknownParent { kind: &'static str, id: String },
    #[error("{0} is outside the controlled vocabulary")]
    VocabularyViolation(String),
    #[error("{0} is out of range")]
    CoordinateOutOfRange(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("date range starts {from} after it ends {to}")]
    InvalidDateRange { from: NaiveDate, to: NaiveDate },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("storage: {0}")]
    Io(String),
    #[error("log line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
}

impl CatalogError {
    /// Stable machine-readable code, used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::NotFound { .. } => "not_found",
            CatalogError::UnknownParent { .. } => "unknown_parent",
            CatalogError::VocabularyViolation(_) => "vocabulary_violation",
            CatalogError::CoordinateOutOfRange(_) => "coordinate_out_of_range",
            CatalogError::InvalidRecord(_) => "invalid_record",
            CatalogError::InvalidDateRange { .. } => "invalid_date_range",
            CatalogError::InvalidQuery(_) => "invalid_query",
            CatalogError::MalformedHeader(_) => "malformed_header",
            CatalogError::Io(_) => "storage_error",
            CatalogError::CorruptLog { .. } => "corrupt_log",
        }
    }
}

/// The portal's 23-network distribution fixture: inventory, sites and the
/// sensors of the largest network.
pub mod fixture {
    use crate::{import_csv, Catalog, CatalogError, ImportReport};

    pub const INVENTORY: &str = include_str!("../fixtures/inventory.csv");
    pub const SITES: &str = include_str!("../fixtures/sites.csv");
    pub const SENSORS: &str = include_str!("../fixtures/sensors.csv");
    pub const LARGEST_NETWORK_ID: &str = "novi-sad-urban-network-nsunet";

    pub fn load(catalog: &Catalog) -> Result<[ImportReport; 3], CatalogError> {
        Ok([
            import_csv(catalog, INVENTORY.as_bytes())?,
            import_csv(catalog, SITES.as_bytes())?,
            import_csv(catalog, SENSORS.as_bytes())?,
        ])
    }
}
