//! The `aurora` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use aurora_core::LocalEmulator;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_config, CampaignConfig, ConfigError};
use crate::output::{self, fmt_sig, OutputError};
use crate::plots::{emit_plots, PlotError};
use crate::runner::{
    run_calibration, run_campaign, run_closed_loops, summarize_records, CampaignError,
    SummaryOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;
pub const EXIT_EMPTY: i32 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "aurora",
    version,
    about = "Phase-offset compensation campaigns on a noisy qubit emulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Campaign config (TOML). Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the offset grid and run the closed-loop controller per phi.
    Calibrate(Common),
    /// Run a full campaign and write records, summaries, result.json and plots.
    Run(Common),
    /// Recompute summary.csv from an existing records.csv.
    Stats {
        #[arg(long)]
        records: PathBuf,
        /// Config supplying summary options (preliminary trial, bootstrap).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for summary.csv; defaults to the directory of the records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Redraw the figures from an existing result.json.
    Plot {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error(transparent)]
    Campaign(CampaignError),
    #[error("campaign has no trials to run (empty condition list)")]
    Empty,
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(c) => CliError::Config(c),
            other => CliError::Campaign(other),
        }
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Output(_) | CliError::Plot(PlotError::Io { .. }) => EXIT_IO,
            CliError::Plot(_) | CliError::Campaign(_) => EXIT_RUNTIME,
            CliError::Empty => EXIT_EMPTY,
        }
    }

    fn kind(&self) -> &'static str {
        match self.code() {
            EXIT_CONFIG => "config",
            EXIT_IO => "io",
            EXIT_EMPTY => "empty",
            _ => "runtime",
        }
    }
}

fn load_config(common: &Common) -> Result<CampaignConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => CampaignConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn source_date() -> Option<String> {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .filter(|s| s.parse::<u64>().is_ok())
        .map(|s| format!("unix:{s}"))
}

fn parent_of(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn cmd_run(common: Common) -> Result<(), CliError> {
    let cfg = load_config(&common)?;
    let mut rs = run_campaign(&cfg)?;
    rs.provenance.timestamp = source_date();
    let files = output::write_results(&rs, &cfg.output_dir)?;
    let plots = emit_plots(&rs, &cfg.output_dir)?;
    for f in files.iter().chain(&plots.written) {
        println!("wrote {}", f.display());
    }
    for notice in &plots.skipped {
        println!("{notice}");
    }
    println!("delta_phi* = {}", fmt_sig(rs.delta_phi_star));
    for s in &rs.summaries {
        println!(
            "phi={} {:<15} mean_ae={} reduction={}",
            fmt_sig(s.phi),
            s.condition.tag(),
            fmt_sig(s.ae.mean),
            s.reduction_pct.map(fmt_sig).unwrap_or_else(|| "-".into()),
        );
    }
    if rs.records.is_empty() {
        return Err(CliError::Empty);
    }
    Ok(())
}

#[derive(Serialize)]
struct CalibrationReport {
    calibration: aurora_core::Calibration,
    closed_loop: Vec<aurora_core::ClosedLoopRun<f64>>,
}

fn cmd_calibrate(common: Common) -> Result<(), CliError> {
    let cfg = load_config(&common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(CampaignError::from)?;
    let report = pool.install(|| -> Result<_, CampaignError> {
        Ok(CalibrationReport {
            calibration: run_calibration(&cfg, &LocalEmulator)?,
            closed_loop: run_closed_loops(&cfg, &LocalEmulator)?,
        })
    })?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join("calibration.json");
    let text = serde_json::to_string_pretty(&report).map_err(|source| OutputError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    println!("wrote {}", path.display());
    println!(
        "delta_phi* = {}",
        fmt_sig(report.calibration.delta_phi_star)
    );
    for run in &report.closed_loop {
        println!(
            "phi={} closed loop: {:?} after {} iterations, delta_phi = {}",
            fmt_sig(run.phi),
            run.termination,
            run.state.iteration(),
            fmt_sig(run.final_delta_phi),
        );
    }
    Ok(())
}

fn cmd_stats(
    records: PathBuf,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = match config {
        Some(p) => parse_config(&p)?,
        None => CampaignConfig::default(),
    };
    let rows = output::read_records(&records)?;
    if rows.is_empty() {
        return Err(CliError::Empty);
    }
    let summaries = summarize_records(&rows, &SummaryOptions::from(&cfg))?;
    let dir = out.unwrap_or_else(|| parent_of(&records));
    fs::create_dir_all(&dir).map_err(|source| OutputError::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join(output::SUMMARY_FILE);
    output::write_summary(&summaries, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_plot(result: PathBuf, out: Option<PathBuf>) -> Result<(), CliError> {
    let rs = output::load_result(&result)?;
    let dir = out.unwrap_or_else(|| parent_of(&result));
    let report = emit_plots(&rs, &dir)?;
    for f in &report.written {
        println!("wrote {}", f.display());
    }
    for notice in &report.skipped {
        println!("{notice}");
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn cli_main<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Calibrate(c) => cmd_calibrate(c),
        Command::Run(c) => cmd_run(c),
        Command::Stats {
            records,
            config,
            out,
        } => cmd_stats(records, config, out),
        Command::Plot { result, out } => cmd_plot(result, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            e.code()
        }
    }
}
