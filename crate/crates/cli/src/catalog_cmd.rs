use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use fairmet_catalog::api::{serve as serve_api, TOKEN_ENV};
use fairmet_catalog::{import_csv, Catalog, GroupBy};
use serde_json::{json, Value};

use crate::{read_file, write_file};

fn open(data_dir: &Path) -> Result<Catalog> {
    Catalog::open(data_dir).with_context(|| format!("opening catalog in {}", data_dir.display()))
}

/// Rows that fail validation are reported and skipped; the others are stored.
/// Any rejected row makes the command fail.
pub fn import(input: &Path, data_dir: &Path, out: Option<&Path>) -> Result<()> {
    let catalog = open(data_dir)?;
    let bytes = read_file(input)?;
    let report = import_csv(&catalog, bytes.as_slice()).with_context(|| format!("importing {}", input.display()))?;
    catalog.flush()?;
    eprintln!(
        "{}: imported {} {:?} rows, rejected {}",
        input.display(),
        report.imported,
        report.kind,
        report.errors.len()
    );
    for e in &report.errors {
        eprintln!("  row {}: {} ({})", e.row, e.reason, e.code);
    }
    if let Some(p) = out {
        write_file(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if !report.errors.is_empty() {
        bail!("{} row(s) rejected", report.errors.len());
    }
    Ok(())
}

fn stats_json(catalog: &Catalog, group_by: GroupBy) -> Value {
    let counts = catalog.stats(group_by);
    let total: usize = counts.values().sum();
    json!({ "group_by": group_by.name(), "total": total, "counts": counts })
}

pub fn stats(data_dir: &Path, out: Option<&Path>, group_by: Option<&str>) -> Result<()> {
    let catalog = open(data_dir)?;
    let value = match group_by {
        Some(g) => stats_json(&catalog, g.parse()?),
        None => Value::Array(
            [GroupBy::Country, GroupBy::LocalEnvironment, GroupBy::Seasonality]
                .into_iter()
                .map(|g| stats_json(&catalog, g))
                .collect(),
        ),
    };
    let text = serde_json::to_string_pretty(&value)? + "\n";
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn serve(data_dir: &Path, host: &str, port: u16) -> Result<()> {
    let catalog = Arc::new(open(data_dir)?);
    let token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
    if token.is_none() {
        eprintln!("{TOKEN_ENV} is not set; write endpoints will refuse every request");
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        eprintln!(
            "serving {} networks on http://{}",
            catalog.network_count(),
            listener.local_addr()?
        );
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            eprintln!("shutting down");
        };
        serve_api(catalog, token, listener, shutdown).await?;
        Ok(())
    })
}
