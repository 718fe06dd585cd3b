//! `fairmet`: ingestion, gap analysis, filling, QC, benchmarking and the
//! metadata catalog behind one command.
//!
//! Machine outputs go to the files named by flags; diagnostics go to stderr.
//! Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fairmet_core::obs::Step;

mod catalog_cmd;
mod series_cmd;

#[derive(Parser)]
#[command(
    name = "fairmet",
    version,
    about = "Micrometeorological gap filling, QC, benchmarking and metadata catalog"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FillMethod {
    Nearest,
    Linear,
    Spline,
    Pchip,
    Akima,
    Rbf,
    Ols,
    Rf,
    Gbdt,
    Debias,
}

#[derive(Subcommand)]
enum Command {
    /// Regularize an observation CSV onto its step grid.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "3600s")]
        step: Step,
    },
    /// Report gaps and the gap profile of every series.
    Gaps {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "3600s")]
        step: Step,
        #[arg(long)]
        report: PathBuf,
    },
    /// Fill missing slots.
    Fill {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: FillMethod,
        #[arg(long)]
        out: PathBuf,
        /// Observation files whose series of the same variable act as neighbors.
        #[arg(long, value_delimiter = ',')]
        neighbors: Vec<PathBuf>,
        #[arg(long)]
        reanalysis: Option<PathBuf>,
        #[arg(long, default_value = "3600s")]
        step: Step,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Provenance CSV; defaults to `<out>.provenance.csv`.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Flag suspect and failed observations.
    Qc {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        neighbors: Vec<PathBuf>,
        /// QC thresholds in TOML.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "3600s")]
        step: Step,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a benchmark grid and write one row per configuration and fold.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Station observations; the synthetic network is used when absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        reanalysis: Option<PathBuf>,
        #[arg(long, default_value = "3600s")]
        step: Step,
        /// Aggregated summary table.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "variable,model,gap_size")]
        group_by: Vec<String>,
        #[arg(long, default_value = "mean")]
        statistic: String,
    },
    /// Import a network inventory, sites or sensors CSV into the catalog.
    CatalogImport {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        /// Import report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Network counts per country, environment or seasonality, as JSON.
    CatalogStats {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// One of country, environment, seasonality; all three when absent.
        #[arg(long)]
        group_by: Option<String>,
    },
    /// Serve the catalog REST interface until interrupted.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `<path>` with `suffix` appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, out, step } => series_cmd::ingest(&input, &out, step),
        Command::Gaps { input, step, report } => series_cmd::gaps(&input, step, &report),
        Command::Fill {
            input,
            method,
            out,
            neighbors,
            reanalysis,
            step,
            seed,
            provenance,
        } => {
            let provenance = provenance.unwrap_or_else(|| sibling(&out, ".provenance.csv"));
            series_cmd::fill(&series_cmd::FillArgs {
                input: &input,
                method,
                out: &out,
                neighbors: &neighbors,
                reanalysis: reanalysis.as_deref(),
                step,
                seed,
                provenance: &provenance,
            })
        }
        Command::Qc {
            input,
            out,
            neighbors,
            config,
            step,
            report,
        } => series_cmd::qc(&input, &out, &neighbors, config.as_deref(), step, report.as_deref()),
        Command::Bench {
            grid,
            out,
            seed,
            input,
            reanalysis,
            step,
            report,
            group_by,
            statistic,
        } => {
            if reanalysis.is_some() && input.is_none() {
                bail!("--reanalysis needs --in; the synthetic network carries its own reanalysis");
            }
            series_cmd::bench(&series_cmd::BenchArgs {
                grid: &grid,
                out: &out,
                seed,
                input: input.as_deref(),
                reanalysis: reanalysis.as_deref(),
                step,
                report: report.as_deref(),
                group_by: &group_by,
                statistic: &statistic,
            })
        }
        Command::CatalogImport { input, data_dir, out } => catalog_cmd::import(&input, &data_dir, out.as_deref()),
        Command::CatalogStats {
            data_dir,
            out,
            group_by,
        } => catalog_cmd::stats(&data_dir, out.as_deref(), group_by.as_deref()),
        Command::Serve { data_dir, port, host } => catalog_cmd::serve(&data_dir, &host, port),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Only bench fans out; forest fitting elsewhere stays on one thread.
    if !matches!(cli.command, Command::Bench { .. }) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
