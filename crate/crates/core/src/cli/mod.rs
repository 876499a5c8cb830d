//! Command-line front end: `solve`, `verify`, `sweep`, `calibrate`.

mod commands;
mod config;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{cmd_calibrate, cmd_solve, cmd_sweep, cmd_verify, CommandOutcome};
pub use config::{RunConfig, CHECK_NAMES};
pub use report::{RegularityReport, StageTelemetry, ToolInfo, SWEEP_COLUMNS};

/// Environment variable that overrides the output directory of the config file.
pub const OUT_DIR_ENV: &str = "PQFRAC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "pqfrac", version, about = "Regularity diagnostics for the regularized (p,q)-Laplacian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the continuation solver and write one field per stage.
    Solve(RunArgs),
    /// Run the configured checks and write a JSON report.
    Verify(RunArgs),
    /// Run a parameter sweep and write a CSV table.
    Sweep(RunArgs),
    /// Recompute the pinned lemp4 constants and print them as TOML.
    Calibrate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } | Error::LineSearchStall { .. } => 3,
        Error::Io(_) | Error::Json(_) | Error::NonFiniteField(_) | Error::RootBracketFailure { .. } => 1,
        _ => 2,
    }
}

impl RunArgs {
    /// Output directory: flag, then environment, then config, then `out`.
    pub fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        if let Some(p) = &self.out {
            return p.clone();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()))
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let args = match &cli.command {
        Command::Calibrate { out } => {
            return match cmd_calibrate(out.as_deref()) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Solve(a) | Command::Verify(a) | Command::Sweep(a) => a,
    };
    if let Some(j) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let mut cfg = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out_dir(&cfg);
    let result = match &cli.command {
        Command::Solve(_) => cmd_solve(&cfg, &out),
        Command::Verify(_) => cmd_verify(&cfg, &out),
        Command::Sweep(_) => cmd_sweep(&cfg, &out),
        Command::Calibrate { .. } => unreachable!(),
    };
    match result {
        Ok(outcome) => {
            for line in &outcome.messages {
                println!("{line}");
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
