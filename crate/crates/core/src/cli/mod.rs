//! Command-line front end: configuration, orchestration and CSV output.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid configuration or
//! grid mismatch, 3 blow-up, 4 resource guard.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use commands::{CommandResult, Failure};
pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pspin", version, about = "Spherical mixed p-spin dynamics in a field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `[output] directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Master seed, overriding `[mc] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the limiting two-time equations.
    Integrate,
    /// Finite-N Langevin Monte Carlo statistics.
    Simulate,
    /// Stationary FDT solution, plus a phase sweep if `h_grid` is set.
    Fdt,
    /// Predicted transition line over `[fdt] h_grid`.
    Phase,
    /// Monte Carlo or FDT against the integrator.
    Compare,
    /// Crossing-series response against the integrator.
    Oracle,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. }
        | Error::NoPotential
        | Error::RandomField(_)
        | Error::GridMismatch(_)
        | Error::OutOfRange { .. } => EXIT_CONFIG,
        Error::BlowUp { .. } | Error::NormBlowUp { .. } => EXIT_BLOW_UP,
        Error::Resource { .. } => EXIT_RESOURCE,
        _ => EXIT_CHECK_FAILED,
    }
}

/// Parses a configuration and applies the command-line overrides.
pub fn load_config(cli: &Cli) -> crate::Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| crate::error::invalid("config", "--config PATH is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| crate::error::invalid("config", format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(seed) = cli.seed {
        if let Some(mc) = cfg.mc.as_mut() {
            mc.seed = seed;
        }
    }
    Ok(cfg)
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> CommandResult {
    match command {
        Command::Integrate => commands::run_integrate(cfg),
        Command::Simulate => commands::run_simulate(cfg),
        Command::Fdt => commands::run_fdt(cfg),
        Command::Phase => commands::run_phase(cfg),
        Command::Compare => commands::run_compare(cfg),
        Command::Oracle => commands::run_oracle(cfg),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_RESOURCE;
        }
    };
    let result = pool.install(|| dispatch(cli.command, &cfg));
    let dir = &cfg.output.directory;
    match result {
        Ok(outcome) => {
            if let Err(e) = outcome.artifacts.write(dir) {
                eprintln!("error: writing {}: {e}", dir.display());
                return EXIT_RESOURCE;
            }
            println!("{}", outcome.summary);
            if outcome.pass {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(Failure { error, partial }) => {
            eprintln!("error: {error}");
            if let Some(p) = partial {
                match p.write(dir) {
                    Ok(_) => eprintln!("partial output written to {}", dir.display()),
                    Err(e) => eprintln!("error: writing partial output: {e}"),
                }
            }
            exit_code(&error)
        }
    }
}

/// Entry point for `main`: parses `args` and runs.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
