use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use serde::Serialize;

use crate::model::{FairChecklist, NetworkRecord, Record, SearchQuery, SensorRecord, SiteRecord};
use crate::CatalogError;

pub const LOG_FILE: &str = "catalog.ndjson";

/// In-memory indexes; the log replays into exactly this.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    pub networks: BTreeMap<String, NetworkRecord>,
    pub sites: BTreeMap<String, SiteRecord>,
    pub sensors: BTreeMap<String, SensorRecord>,
}

impl State {
    fn check(&self, record: &Record) -> Result<(), CatalogError> {
        match record {
            Record::Network(n) => n.validate(),
            Record::Site(s) => {
                s.validate()?;
                if !self.networks.contains_key(&s.network_id) {
                    return Err(CatalogError::UnknownParent {
                        kind: "network",
                        id: s.network_id.clone(),
                    });
                }
                Ok(())
            }
            Record::Sensor(s) => {
                s.validate()?;
                if !self.sites.contains_key(&s.site_id) {
                    return Err(CatalogError::UnknownParent {
                        kind: "site",
                        id: s.site_id.clone(),
                    });
                }
                Ok(())
            }
        }
    }

    fn apply(&mut self, record: Record) {
        match record {
            Record::Network(n) => {
                self.networks.insert(n.id.clone(), n);
            }
            Record::Site(s) => {
                self.sites.insert(s.id.clone(), s);
            }
            Record::Sensor(s) => {
                self.sensors.insert(s.id.clone(), s);
            }
        }
    }

    fn records(&self) -> impl Iterator<Item = Record> + '_ {
        self.networks
            .values()
            .cloned()
            .map(Record::Network)
            .chain(self.sites.values().cloned().map(Record::Site))
            .chain(self.sensors.values().cloned().map(Record::Sensor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupBy {
    Country,
    LocalEnvironment,
    Seasonality,
}

impl GroupBy {
    pub fn name(self) -> &'static str {
        match self {
            GroupBy::Country => "country",
            GroupBy::LocalEnvironment => "environment",
            GroupBy::Seasonality => "seasonality",
        }
    }
}

impl FromStr for GroupBy {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "country" => Ok(GroupBy::Country),
            "environment" | "local_environment" => Ok(GroupBy::LocalEnvironment),
            "seasonality" => Ok(GroupBy::Seasonality),
            _ => Err(CatalogError::InvalidQuery(format!("unknown grouping {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteDetail {
    #[serde(flatten)]
    pub site: SiteRecord,
    pub sensors: Vec<SensorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkDetail {
    pub network: NetworkRecord,
    pub sites: Vec<SiteDetail>,
}

struct Inner {
    state: State,
    log: Option<File>,
}

/// Metadata store. Writes are serialized and reach disk before they become
/// visible; reads share a consistent snapshot.
pub struct Catalog {
    dir: Option<PathBuf>,
    inner: RwLock<Inner>,
}

fn io(e: std::io::Error) -> CatalogError {
    CatalogError::Io(e.to_string())
}

fn open_append(path: &Path) -> Result<File, CatalogError> {
    OpenOptions::new().create(true).append(true).open(path).map_err(io)
}

impl Catalog {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            inner: RwLock::new(Inner {
                state: State::default(),
                log: None,
            }),
        }
    }

    /// Open or create the store under `dir`, replaying its log. A torn final
    /// line (a write cut short) is dropped; any other bad line is an error.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io)?;
        let path = dir.join(LOG_FILE);
        let mut state = State::default();
        if path.exists() {
            let mut reader = BufReader::new(File::open(&path).map_err(io)?);
            let mut good_len = 0u64;
            let mut line_no = 0;
            let mut buf = String::new();
            loop {
                buf.clear();
                let n = reader.read_line(&mut buf).map_err(io)?;
                if n == 0 {
                    break;
                }
                line_no += 1;
                let complete = buf.ends_with('\n');
                if buf.trim().is_empty() {
                    good_len += n as u64;
                    continue;
                }
                let parsed = serde_json::from_str::<Record>(buf.trim_end())
                    .map_err(|e| e.to_string())
                    .and_then(|r| state.check(&r).map(|_| r).map_err(|e| e.to_string()));
                match parsed {
                    Ok(r) if complete => {
                        state.apply(r);
                        good_len += n as u64;
                    }
                    Err(reason) if complete => return Err(CatalogError::CorruptLog { line: line_no, reason }),
                    _ => break,
                }
            }
            let file = OpenOptions::new().write(true).open(&path).map_err(io)?;
            if file.metadata().map_err(io)?.len() != good_len {
                file.set_len(good_len).map_err(io)?;
                file.sync_all().map_err(io)?;
            }
        }
        let log = open_append(&path)?;
        Ok(Self {
            dir: Some(dir),
            inner: RwLock::new(Inner { state, log: Some(log) }),
        })
    }

    pub fn log_path(&self) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(LOG_FILE))
    }

    fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Insert or replace by id. Returns once the record is on disk.
    pub fn upsert(&self, record: Record) -> Result<String, CatalogError> {
        let mut inner = self.write();
        inner.state.check(&record)?;
        if let Some(log) = inner.log.as_mut() {
            let mut line = serde_json::to_string(&record).map_err(|e| CatalogError::Io(e.to_string()))?;
            line.push('\n');
            log.write_all(line.as_bytes()).map_err(io)?;
            log.sync_data().map_err(io)?;
        }
        let id = record.id().to_string();
        inner.state.apply(record);
        Ok(id)
    }

    pub fn upsert_network(&self, r: NetworkRecord) -> Result<String, CatalogError> {
        self.upsert(Record::Network(r))
    }

    pub fn upsert_site(&self, r: SiteRecord) -> Result<String, CatalogError> {
        self.upsert(Record::Site(r))
    }

    pub fn upsert_sensor(&self, r: SensorRecord) -> Result<String, CatalogError> {
        self.upsert(Record::Sensor(r))
    }

    /// Rewrite the log as one line per live record: temp file, fsync, rename.
    pub fn compact(&self) -> Result<(), CatalogError> {
        let Some(path) = self.log_path() else { return Ok(()) };
        let mut inner = self.write();
        let tmp = path.with_extension("ndjson.tmp");
        {
            let mut f = File::create(&tmp).map_err(io)?;
            for r in inner.state.records() {
                let line = serde_json::to_string(&r).map_err(|e| CatalogError::Io(e.to_string()))?;
                writeln!(f, "{line}").map_err(io)?;
            }
            f.sync_all().map_err(io)?;
        }
        fs::rename(&tmp, &path).map_err(io)?;
        if let Some(dir) = &self.dir {
            if let Ok(d) = File::open(dir) {
                let _ = d.sync_all();
            }
        }
        let mut log = open_append(&path)?;
        log.seek(SeekFrom::End(0)).map_err(io)?;
        inner.log = Some(log);
        Ok(())
    }

    /// Push any buffered log data to disk.
    pub fn flush(&self) -> Result<(), CatalogError> {
        if let Some(log) = self.write().log.as_mut() {
            log.flush().map_err(io)?;
            log.sync_all().map_err(io)?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> State {
        self.read().state.clone()
    }

    pub fn network(&self, id: &str) -> Option<NetworkRecord> {
        self.read().state.networks.get(id).cloned()
    }

    pub fn site(&self, id: &str) -> Option<SiteRecord> {
        self.read().state.sites.get(id).cloned()
    }

    pub fn sensor(&self, id: &str) -> Option<SensorRecord> {
        self.read().state.sensors.get(id).cloned()
    }

    pub fn network_count(&self) -> usize {
        self.read().state.networks.len()
    }

    /// Matching networks ordered by (country, name, id).
    pub fn search_networks(&self, q: &SearchQuery) -> Result<Vec<NetworkRecord>, CatalogError> {
        q.validate()?;
        let mut out: Vec<NetworkRecord> = self
            .read()
            .state
            .networks
            .values()
            .filter(|n| q.matches(n))
            .cloned()
            .collect();
        out.sort_by(|a, b| (&a.country, &a.name, &a.id).cmp(&(&b.country, &b.name, &b.id)));
        Ok(out)
    }

    pub fn stats(&self, group_by: GroupBy) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for n in self.read().state.networks.values() {
            let key = match group_by {
                GroupBy::Country => n.country.clone(),
                GroupBy::LocalEnvironment => n.local_environment.to_string(),
                GroupBy::Seasonality => n.seasonality.to_string(),
            };
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    fn sites_in(state: &State, network_id: &str) -> Vec<SiteRecord> {
        let mut sites: Vec<SiteRecord> = state
            .sites
            .values()
            .filter(|s| s.network_id == network_id)
            .cloned()
            .collect();
        sites.sort_by(|a, b| (&a.name, &a.id).cmp(&(&b.name, &b.id)));
        sites
    }

    fn sensors_at(state: &State, site_id: &str) -> Vec<SensorRecord> {
        state
            .sensors
            .values()
            .filter(|s| s.site_id == site_id)
            .cloned()
            .collect()
    }

    /// Sites of a network ordered by name.
    pub fn sites_of(&self, network_id: &str) -> Result<Vec<SiteRecord>, CatalogError> {
        let inner = self.read();
        if !inner.state.networks.contains_key(network_id) {
            return Err(CatalogError::NotFound {
                kind: "network",
                id: network_id.into(),
            });
        }
        Ok(Self::sites_in(&inner.state, network_id))
    }

    /// Sensors of a site ordered by id.
    pub fn sensors_of(&self, site_id: &str) -> Result<Vec<SensorRecord>, CatalogError> {
        let inner = self.read();
        if !inner.state.sites.contains_key(site_id) {
            return Err(CatalogError::NotFound {
                kind: "site",
                id: site_id.into(),
            });
        }
        Ok(Self::sensors_at(&inner.state, site_id))
    }

    pub fn network_detail(&self, id: &str) -> Result<NetworkDetail, CatalogError> {
        let inner = self.read();
        let network = inner
            .state
            .networks
            .get(id)
            .cloned()
            .ok_or_else(|| CatalogError::NotFound {
                kind: "network",
                id: id.into(),
            })?;
        let sites = Self::sites_in(&inner.state, id)
            .into_iter()
            .map(|site| SiteDetail {
                sensors: Self::sensors_at(&inner.state, &site.id),
                site,
            })
            .collect();
        Ok(NetworkDetail { network, sites })
    }

    pub fn fair_checklist(&self, id: &str) -> Result<FairChecklist, CatalogError> {
        let inner = self.read();
        let network = inner.state.networks.get(id).ok_or_else(|| CatalogError::NotFound {
            kind: "network",
            id: id.into(),
        })?;
        let sensors: Vec<&SensorRecord> = inner
            .state
            .sensors
            .values()
            .filter(|s| {
                inner
                    .state
                    .sites
                    .get(&s.site_id)
                    .is_some_and(|site| site.network_id == id)
            })
            .collect();
        Ok(FairChecklist::evaluate(network, &sensors))
    }
}
