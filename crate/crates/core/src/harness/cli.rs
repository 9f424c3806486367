use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use super::config::{EstimatorKind, ExperimentConfig};
use super::export::{
    bound_table, export_angular_map, write_angular_csv, write_bounds_csv, write_sweep_csv,
    write_sweep_json, write_trials_csv,
};
use super::selftest::run_selftest;
use super::sweep::run_sweep;
use crate::channel::TruthMode;

#[derive(Debug, Parser)]
#[command(name = "ris-crlb", version, about = "Joint-typicality cascade channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo sweep over K and SNR; writes `k,snr_db,mse,crlb,upper_bound,fail_rate,trials`.
    Sweep(SweepArgs),
    /// Angular-domain magnitude grid of one physical channel draw.
    AngularMap(MapArgs),
    /// CRLB and analytic upper-bound table without Monte Carlo.
    Crlb(BoundArgs),
    /// Runs the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat TOML config file; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `master_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Ground-truth mode: synthetic, on-grid or off-grid.
    #[arg(long)]
    mode: Option<TruthMode>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    trials: Option<usize>,
    /// Also write per-trial records (`<out>.trials.csv`).
    #[arg(long)]
    per_trial: bool,
    /// jt, genie or omp.
    #[arg(long)]
    estimator: Option<EstimatorKind>,
    /// Fixed typicality threshold instead of the per-point default.
    #[arg(long)]
    delta: Option<f64>,
    /// Worker threads.
    #[arg(long, env = "RIS_CRLB_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    delta: Option<f64>,
}

fn load_config(common: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(mode) = common.mode {
        cfg.mode = mode;
    }
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(e) = args.estimator {
        cfg.estimator = e;
    }
    if let Some(d) = args.delta {
        cfg.delta = Some(d);
    }
    cfg.validate()?;
    let result = run_sweep(&cfg, args.threads)?;

    let out_path = args.common.out.as_deref();
    let mut out = open_out(out_path)?;
    write_sweep_csv(&result, &mut out)?;
    out.flush()?;

    if let Some(path) = out_path {
        let json = sibling(path, ".json");
        let f = BufWriter::new(File::create(&json).with_context(|| format!("cannot create {}", json.display()))?);
        write_sweep_json(&cfg, &result, args.threads, args.per_trial, f)?;
        if args.per_trial {
            let trials = sibling(path, ".trials.csv");
            let mut f = BufWriter::new(
                File::create(&trials).with_context(|| format!("cannot create {}", trials.display()))?,
            );
            write_trials_csv(&result.records, &mut f)?;
            f.flush()?;
        }
    } else if args.per_trial {
        write_trials_csv(&result.records, io::stdout().lock())?;
    }
    Ok(())
}

fn angular_map(args: MapArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.common)?;
    if args.common.mode.is_none() && !cfg.mode.is_physical() {
        cfg.mode = TruthMode::PhysicalOnGrid;
    }
    let map = export_angular_map(&cfg, cfg.master_seed)?;
    let mut out = open_out(args.common.out.as_deref())?;
    write_angular_csv(&map, &mut out)?;
    out.flush()?;
    Ok(())
}

fn bounds(args: BoundArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(d) = args.delta {
        cfg.delta = Some(d);
    }
    let rows = bound_table(&cfg)?;
    let mut out = open_out(args.common.out.as_deref())?;
    write_bounds_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn selftest() -> anyhow::Result<()> {
    let results = run_selftest();
    let mut failed = 0;
    for c in &results {
        println!("[{}] {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        anyhow::bail!("{failed} of {} checks failed", results.len());
    }
    Ok(())
}

/// Command-line entry point; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::AngularMap(a) => angular_map(a),
        Command::Crlb(a) => bounds(a),
        Command::Selftest => selftest(),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
