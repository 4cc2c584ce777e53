//! The `shiftlab` command-line runner.
//!
//! A run reads one TOML config, executes the experiment it names and writes
//! `report.json`, the kind's CSV tables and `manifest.json` into the output
//! directory. Exit codes: 0 success, 1 invalid input or runtime error,
//! 2 failed check, 3 infinite similarity where finiteness was required.

pub mod config;
pub mod run;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{
    AlphaCheckConfig, Experiment, ExperimentConfig, Grid, NamedKernel, PredictConfig,
    RateSweepConfig, RhoConfig, RhoMethod, RiskConfig, SpectralConfig, TransferCheckConfig,
    DEFAULT_OUTPUT,
};
pub use run::{execute, rho_between, Artifact, Outcome, RhoCurve, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK: i32 = 2;
pub const EXIT_EXPLOSION: i32 = 3;

pub const THREADS_ENV: &str = "SHIFTLAB_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(
    name = "shiftlab",
    version,
    about = "Run a covariate-shift experiment described by a TOML config"
)]
pub struct Args {
    /// Experiment config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    timestamp: u64,
    kind: &'static str,
    seed: u64,
    status: &'static str,
    exit_code: i32,
    files: Vec<&'a str>,
    config: &'a ExperimentConfig,
}

/// Exit code for an error.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Explosion { .. } => EXIT_EXPLOSION,
        _ => EXIT_INVALID,
    }
}

/// Writes the artifacts and the manifest into `dir`.
pub fn write_outcome(dir: &Path, config: &ExperimentConfig, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    let manifest = Manifest {
        tool: "shiftlab",
        version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        kind: config.experiment.kind(),
        seed: config.seed,
        status: outcome.status.label(),
        exit_code: outcome.status.code(),
        files: outcome.artifacts.iter().map(|a| a.name.as_str()).collect(),
        config,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(dir.join("manifest.json"), bytes)?;
    Ok(())
}

/// Loads, resolves, runs and writes one experiment.
pub fn run(args: &Args) -> Result<(ExperimentConfig, Outcome)> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    let config = config.resolve()?;
    let outcome = execute(&config)?;
    let dir = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    write_outcome(&dir, &config, &outcome)?;
    Ok((config, outcome))
}

/// Caps the global thread pool from `SHIFTLAB_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::validation(
            THREADS_ENV,
            format!("expected a positive integer, got {v:?}"),
        )
    })?;
    // a pool configured earlier in the process stays in place
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    match run(&args) {
        Ok((_, outcome)) => {
            if !args.quiet {
                print!("{}", outcome.summary);
            }
            match &outcome.status {
                Status::Success => {}
                Status::CheckFailed(m) => eprintln!("check failed: {m}"),
                Status::Explosion(m) => eprintln!("explosion: {m}"),
            }
            outcome.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}
