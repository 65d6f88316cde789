//! `hdclt`: batch runner for the Gaussian-approximation experiments.
//!
//! Each subcommand runs one experiment from an optional TOML config and
//! writes one CSV per table plus `manifest.json` into the output directory.

use clap::{Args, Parser, Subcommand};
use hdclt::experiments::{self, ExperimentConfig, ExperimentKind, RawConfig};
use hdclt::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "hdclt", version, about = "Monte Carlo experiments for high-dimensional CLTs over hyperrectangles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distance between S_n and its Gaussian analog along an (n, d) grid.
    Simulate(Common),
    /// Factor-model sweep with factor and Nazarov anti-concentration rates.
    Factor(Common),
    /// Skewed-data lower bound at the Gaussian e^{-1} quantile of the max.
    Lowerbound(Common),
    /// Moderate-deviation tail ratio against exp(γx³/(6√n)).
    Cramer(Common),
    /// Smooth-function gap between S^X and the multiplier-swapped S^{ξX}.
    Swap(Common),
    /// Stein-route gap against its explicit right-hand side.
    Stein(Common),
    /// Wild-bootstrap band coverage and bootstrap distance trend.
    Bootstrap(Common),
    /// Rate terms and assembled bounds for one generated data set (JSON).
    Bounds(Common),
    /// Quadrature check of the multiplier Stein identity.
    Steincheck(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML config file; missing keys take the experiment's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `threads` (worker threads; results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(&self) -> (ExperimentKind, &Common) {
        match self {
            Command::Simulate(c) => (ExperimentKind::ConvergenceSweep, c),
            Command::Factor(c) => (ExperimentKind::FactorSweep, c),
            Command::Lowerbound(c) => (ExperimentKind::LowerBoundDemo, c),
            Command::Cramer(c) => (ExperimentKind::CramerRatioCheck, c),
            Command::Swap(c) => (ExperimentKind::LindebergSwap, c),
            Command::Stein(c) => (ExperimentKind::SteinRoute, c),
            Command::Bootstrap(c) => (ExperimentKind::BootstrapCoverage, c),
            Command::Bounds(c) => (ExperimentKind::BoundReport, c),
            Command::Steincheck(c) => (ExperimentKind::SteinCheck, c),
        }
    }
}

fn load_config(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig, Error> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<RawConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RawConfig::default(),
    };
    if args.seed.is_some() {
        raw.master_seed = args.seed;
    }
    if args.threads.is_some() {
        raw.threads = args.threads;
    }
    if args.out.is_some() {
        raw.out_dir = args.out.clone();
    }
    if raw.threads == Some(0) {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    ExperimentConfig::resolve(kind, raw)
}

fn execute(kind: ExperimentKind, args: &Common) -> Result<Vec<PathBuf>, Error> {
    let cfg = load_config(kind, args)?;
    if let Some(t) = cfg.threads {
        // a second initialisation only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let start = Instant::now();
    let output = experiments::run(&cfg)?;
    let manifest = experiments::manifest(&cfg, start.elapsed().as_secs_f64());
    experiments::write_outputs(&cfg.out_dir, &output, manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hdclt {}: {e}", kind.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
