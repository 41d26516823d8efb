//! Batch experiment runner behind the `gaugelab` binary.

pub mod config;
pub mod report;
pub mod runner;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use report::{Report, ReportRow, Summary};
pub use runner::{execute, run, Command};

use crate::error::{Error, Result};

/// Environment variable holding the log filter, e.g. `GAUGELAB_LOG=debug`.
pub const LOG_ENV: &str = "GAUGELAB_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURES: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gaugelab", version, about = "Gauge identities and correlation bounds for transverse-field p-spin glasses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Sub {
    /// Per-sample gauge invariance of H, its spectrum and log Z.
    VerifyGauge,
    /// One-point, two-point and Duhamel identities plus the classical moment identity.
    VerifyIdentities,
    /// Long-range-order and magnetization bounds with their chains.
    Bounds,
    /// Susceptibility bound, finite-difference cross-check and C_L.
    Susceptibility,
    /// Grid over beta, h and mu1 running the suite named in `[sweep]`.
    Sweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::VerifyGauge => Command::VerifyGauge,
            Sub::VerifyIdentities => Command::VerifyIdentities,
            Sub::Bounds => Command::Bounds,
            Sub::Susceptibility => Command::Susceptibility,
            Sub::Sweep => Command::Sweep,
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let outcome = load(&cli).and_then(|cfg| {
        let report = execute(cli.command.into(), &cfg, cli.threads)?;
        let (csv, json) = report.emit(&cfg.output.dir)?;
        Ok((report.summary, csv, json))
    });
    match outcome {
        Ok((s, csv, json)) => {
            println!(
                "{}: {} rows, {} failures, {} control rows; wrote {} and {}",
                Command::from(cli.command).name(),
                s.rows,
                s.failures,
                s.controls,
                csv.display(),
                json.display()
            );
            if s.failures > 0 {
                EXIT_FAILURES
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_FAILURES
            }
        }
    }
}
