//! Command-line front end: `check`, `simulate`, `table`, `stats`, `demo`.
//!
//! Exit codes: 0/1/2 for Semimartingale/NotSemimartingale/Inconclusive
//! (`check`; other commands exit 0 on success), 64 usage or config error,
//! 65 domain error, 66 I/O error.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::criteria::{CriteriaError, Verdict};
use crate::path_stats::StatsError;
use crate::series_sim::SimError;

pub use commands::{cmd_check, cmd_demo, cmd_simulate, cmd_stats, cmd_table, Output};
pub use config::InstanceConfig;

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DOMAIN: i32 = 65;
pub const EXIT_IO: i32 = 66;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => CliError::Config(format!("simulation: {m}")),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<CriteriaError> for CliError {
    fn from(e: CriteriaError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Semimartingale => 0,
        Verdict::NotSemimartingale => 1,
        Verdict::Inconclusive => 2,
    }
}

#[derive(Debug, Parser)]
#[command(name = "simma", version, about = "Semimartingale criteria and shot-noise simulation for mixed moving averages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Instance configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; standard output when omitted (required for `simulate`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `simulation.paths`.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Overrides `simulation.grid_points`.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide the semimartingale property; exit code encodes the verdict.
    Check,
    /// Write per-path (t,x,m,a) and ensemble (i,gamma,eps,t1,t2,r) CSVs.
    Simulate,
    /// Verdict table over the `[table]` parameter ranges.
    Table,
    /// Variation, jump and independence statistics, from a config or from path CSVs.
    Stats {
        /// Path CSVs written by `simulate`.
        #[arg(long)]
        input: Vec<PathBuf>,
    },
    /// Counterexample tables.
    Demo,
}

/// Reads `path` and applies the command-line overrides.
pub fn load_config(cli: &Cli) -> Result<InstanceConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = config::parse(&text)?;
    if cli.seed.is_some() || cli.paths.is_some() || cli.grid.is_some() {
        let sim = cfg
            .simulation
            .as_mut()
            .ok_or_else(|| CliError::Config("--seed/--paths/--grid need a [simulation] block".into()))?;
        if let Some(s) = cli.seed {
            sim.seed = s;
        }
        if let Some(p) = cli.paths {
            sim.paths = p;
        }
        if let Some(g) = cli.grid {
            sim.grid_points = g;
        }
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let out = Output::new(cli.out.clone());
    match &cli.command {
        Command::Check => {
            let cfg = load_config(cli)?;
            let v = cmd_check(&cfg, &out)?;
            if !cli.quiet {
                eprintln!("{}: {v}", cfg.process);
            }
            Ok(verdict_code(v))
        }
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let files = cmd_simulate(&cfg, &out)?;
            if !cli.quiet {
                eprintln!("wrote {files} files");
            }
            Ok(0)
        }
        Command::Table => {
            let cfg = load_config(cli)?;
            let rows = cmd_table(&cfg, &out)?;
            if !cli.quiet {
                eprintln!("{rows} rows");
            }
            Ok(0)
        }
        Command::Stats { input } => {
            let cfg = match (&cli.config, input.is_empty()) {
                (None, false) => None,
                _ => Some(load_config(cli)?),
            };
            cmd_stats(cfg.as_ref(), input, &out)?;
            Ok(0)
        }
        Command::Demo => {
            cmd_demo(&out)?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("simma: {e}");
            e.exit_code()
        }
    }
}
