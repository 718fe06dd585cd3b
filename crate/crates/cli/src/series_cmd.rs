use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fairmet_core::bench::{aggregate, results_csv, run_benchmark, BenchGrid, DataContext, Dimension, Statistic};
use fairmet_core::gapfill::{
    fill_by_interpolation, fill_by_rbf, fit_and_fill, FeatureContext, FeatureSetKind, FillResult, ModelKind,
    ModelParams,
};
use fairmet_core::interp::{Method1D, RbfKernel};
use fairmet_core::obs::{
    detect_gaps, format_timestamp, parse_observations, profile_gaps, serialize_observations, DurationClass,
    ObservationFormat, Step,
};
use fairmet_core::qc::{run_qc, QcConfig};
use fairmet_core::synthetic::{generate, SyntheticConfig};
use fairmet_core::Series;

use crate::{read_file, sibling, write_file, FillMethod};

/// Observed slots on each side of a gap used by the RBF fill.
const RBF_WINDOW: usize = 24;

pub fn load(path: &Path, step: Step) -> Result<Vec<Series>> {
    let bytes = read_file(path)?;
    parse_observations(
        &bytes,
        ObservationFormat {
            step,
            ..Default::default()
        },
    )
    .with_context(|| format!("parsing {}", path.display()))
}

fn load_all(paths: &[impl AsRef<Path>], step: Step) -> Result<Vec<Series>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(load(p.as_ref(), step)?);
    }
    Ok(out)
}

fn label(s: &Series) -> String {
    format!("{}/{}", s.station_id(), s.variable())
}

/// Same-variable series from other stations that share the target's grid.
fn neighbors_of(target: &Series, pool: &[Series]) -> Vec<Series> {
    pool.iter()
        .filter(|s| s.station_id() != target.station_id() && s.variable() == target.variable())
        .filter(|s| {
            let ok = target.grid_aligned(s);
            if !ok {
                eprintln!("warning: {} is not on the grid of {}; ignored", label(s), label(target));
            }
            ok
        })
        .cloned()
        .collect()
}

pub fn ingest(input: &Path, out: &Path, step: Step) -> Result<()> {
    let series = load(input, step)?;
    for s in &series {
        eprintln!("{}: {} slots, {} missing", label(s), s.len(), s.missing_count());
    }
    write_file(out, serialize_observations(&series))
}

fn gap_report(s: &Series) -> String {
    let mut r = String::new();
    let _ = writeln!(
        r,
        "series {} start={} end={} step={} slots={} missing={}",
        label(s),
        format_timestamp(s.start()),
        format_timestamp(s.end()),
        s.step(),
        s.len(),
        s.missing_count()
    );
    r.push_str("gaps\n  start_index,length,start_time,end_time,variable\n");
    for g in detect_gaps(s) {
        let _ = writeln!(
            r,
            "  {},{},{},{},{}",
            g.start_index,
            g.length,
            format_timestamp(g.start_time),
            format_timestamp(g.end_time),
            g.variable
        );
    }
    let p = profile_gaps(s);
    let join = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    r.push_str("profile\n");
    let _ = writeln!(r, "  gap_count={}", p.gap_count);
    let _ = writeln!(r, "  total_missing_fraction={:.6}", p.total_missing_fraction);
    let _ = writeln!(r, "  recurrence_score={:.6}", p.recurrence_score);
    let hist: Vec<String> = DurationClass::ALL
        .iter()
        .map(|c| format!("{}:{}", c, p.duration_histogram.get(c).copied().unwrap_or(0)))
        .collect();
    let _ = writeln!(r, "  duration_histogram={}", hist.join(" "));
    let _ = writeln!(r, "  timing_by_hour={}", join(&p.timing_by_hour));
    let _ = writeln!(r, "  timing_by_month={}", join(&p.timing_by_month));
    r
}

pub fn gaps(input: &Path, step: Step, report: &Path) -> Result<()> {
    let series = load(input, step)?;
    let text: Vec<String> = series.iter().map(gap_report).collect();
    write_file(report, text.join("\n"))
}

pub struct FillArgs<'a> {
    pub input: &'a Path,
    pub method: FillMethod,
    pub out: &'a Path,
    pub neighbors: &'a [std::path::PathBuf],
    pub reanalysis: Option<&'a Path>,
    pub step: Step,
    pub seed: u64,
    pub provenance: &'a Path,
}

fn feature_set_for(neighbors: bool, reanalysis: bool) -> FeatureSetKind {
    match (neighbors, reanalysis) {
        (true, true) => FeatureSetKind::All,
        (true, false) => FeatureSetKind::TemporalNeighbors,
        (false, true) => FeatureSetKind::TemporalReanalysis,
        (false, false) => FeatureSetKind::Temporal,
    }
}

fn interp_method(m: FillMethod) -> Option<Method1D> {
    Some(match m {
        FillMethod::Nearest => Method1D::Nearest,
        FillMethod::Linear => Method1D::Linear,
        FillMethod::Spline => Method1D::SplineCubic,
        FillMethod::Pchip => Method1D::Pchip,
        FillMethod::Akima => Method1D::Akima,
        _ => return None,
    })
}

fn model_kind(m: FillMethod) -> Option<ModelKind> {
    Some(match m {
        FillMethod::Ols => ModelKind::Ols,
        FillMethod::Rf => ModelKind::RandomForest,
        FillMethod::Gbdt => ModelKind::Gbdt,
        FillMethod::Debias => ModelKind::BaselineDebias,
        _ => return None,
    })
}

/// Fill one series; returns the fill and the model manifest text.
fn fill_one(
    target: &Series,
    method: FillMethod,
    pool: &[Series],
    reanalysis: &[Series],
    seed: u64,
) -> Result<(FillResult<f64>, String)> {
    if target.missing_count() == 0 {
        return Ok((
            FillResult {
                series: target.clone(),
                provenance: Vec::new(),
                unfillable: Vec::new(),
            },
            String::new(),
        ));
    }
    if let Some(m) = interp_method(method) {
        return Ok((fill_by_interpolation(target, m)?, String::new()));
    }
    if method == FillMethod::Rbf {
        return Ok((fill_by_rbf(target, RbfKernel::default(), RBF_WINDOW)?, String::new()));
    }
    let kind = model_kind(method).expect("every method is an interpolant or a model");
    let neighbors = neighbors_of(target, pool);
    let rea = reanalysis.iter().find(|r| r.variable() == target.variable());
    let ctx = FeatureContext::new(&neighbors, rea);
    let fs = feature_set_for(!neighbors.is_empty(), rea.is_some());
    let (result, chain) = fit_and_fill(kind, target, &ctx, fs, &ModelParams::default(), seed)?;
    let mut manifest = String::new();
    for m in &chain {
        let _ = writeln!(manifest, "[{}]", label(target));
        manifest.push_str(&m.provenance_manifest());
    }
    Ok((result, manifest))
}

pub fn fill(a: &FillArgs<'_>) -> Result<()> {
    let series = load(a.input, a.step)?;
    let mut pool = series.clone();
    pool.extend(load_all(a.neighbors, a.step)?);
    let reanalysis = match a.reanalysis {
        Some(p) => load(p, a.step)?,
        None => Vec::new(),
    };
    if a.method == FillMethod::Debias && reanalysis.is_empty() {
        bail!("--method debias needs --reanalysis");
    }

    let mut filled = Vec::with_capacity(series.len());
    let mut provenance = String::from("station_id,variable,timestamp,index,source\n");
    let mut manifest = String::new();
    for s in &series {
        let (r, m) =
            fill_one(s, a.method, &pool, &reanalysis, a.seed).with_context(|| format!("filling {}", label(s)))?;
        eprintln!(
            "{}: filled {}, unfillable {}",
            label(s),
            r.provenance.len(),
            r.unfillable.len()
        );
        let csv = r.provenance_csv();
        provenance.push_str(csv.split_once('\n').map_or("", |(_, rows)| rows));
        manifest.push_str(&m);
        filled.push(r.series);
    }
    write_file(a.out, serialize_observations(&filled))?;
    write_file(a.provenance, provenance)?;
    if !manifest.is_empty() {
        write_file(&sibling(a.out, ".models.txt"), manifest)?;
    }
    Ok(())
}

pub fn qc(
    input: &Path,
    out: &Path,
    neighbor_files: &[std::path::PathBuf],
    config: Option<&Path>,
    step: Step,
    report: Option<&Path>,
) -> Result<()> {
    let config = match config {
        Some(p) => {
            let text = String::from_utf8(read_file(p)?).context("QC config is not UTF-8")?;
            QcConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => QcConfig::default(),
    };
    let series = load(input, step)?;
    let mut pool = series.clone();
    pool.extend(load_all(neighbor_files, step)?);

    let mut flagged_csv = String::new();
    let mut text = String::new();
    for s in &series {
        let neighbors: Vec<Series> = pool
            .iter()
            .filter(|n| n.station_id() != s.station_id() && n.variable() == s.variable())
            .cloned()
            .collect();
        let (flagged, rep) = run_qc(s, &neighbors, &config);
        let csv = flagged.to_csv();
        if flagged_csv.is_empty() {
            flagged_csv.push_str(&csv);
        } else {
            flagged_csv.push_str(csv.split_once('\n').map_or("", |(_, rows)| rows));
        }
        text.push_str(&rep.to_text());
    }
    if flagged_csv.is_empty() {
        flagged_csv.push_str("timestamp,station_id,variable,value,flag\n");
    }
    write_file(out, flagged_csv)?;
    match report {
        Some(p) => write_file(p, text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub struct BenchArgs<'a> {
    pub grid: &'a Path,
    pub out: &'a Path,
    pub seed: u64,
    pub input: Option<&'a Path>,
    pub reanalysis: Option<&'a Path>,
    pub step: Step,
    pub report: Option<&'a Path>,
    pub group_by: &'a [String],
    pub statistic: &'a str,
}

pub fn bench(a: &BenchArgs<'_>) -> Result<()> {
    let text = String::from_utf8(read_file(a.grid)?).context("grid file is not UTF-8")?;
    let grid = BenchGrid::from_toml(&text).with_context(|| format!("parsing {}", a.grid.display()))?;
    let dims: Vec<Dimension> = a
        .group_by
        .iter()
        .map(|d| Ok(d.parse::<Dimension>()?))
        .collect::<Result<_>>()?;
    let statistic: Statistic = a.statistic.parse()?;

    let data = match a.input {
        Some(p) => {
            let rea = match a.reanalysis {
                Some(r) => load(r, a.step)?,
                None => Vec::new(),
            };
            DataContext::new(load(p, a.step)?, rea)
        }
        None => {
            let net = generate::<f64>(&SyntheticConfig::with_seed(a.seed));
            DataContext::new(net.stations, net.reanalysis)
        }
    };
    let rows = run_benchmark(&grid, &data, a.seed)?;
    eprintln!("{} result rows", rows.len());
    write_file(a.out, results_csv(&rows))?;
    if let Some(p) = a.report {
        write_file(p, aggregate(&rows, &dims, statistic).to_text())?;
    }
    Ok(())
}
