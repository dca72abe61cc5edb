//! Command-line front end: runs scenarios and writes snapshots, diagnostics and images.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod render;

/// Environment variable that fixes the worker thread count.
const THREADS_VAR: &str = "PHASELAB_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or input files; exit code 2.
    Config(String),
    Core(phaselab::Error),
    Io(std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 when the numerics abort a run.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<phaselab::Error> for CliError {
    fn from(e: phaselab::Error) -> Self {
        match e {
            phaselab::Error::Config(m) => Self::Config(m),
            other => Self::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

#[derive(Parser)]
#[command(name = "phaselab", version, about = "Wigner-function and classical phase-space simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write snapshots, diagnostics.csv and manifest.txt.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quartic scenario: coherent quantum, decohered quantum and classical panels at one time.
    Triptych {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per value of a parameter, with a summary CSV and log-log fits.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// hbar, D or m.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the measure axioms of a snapshot over a partition; prints key=value lines.
    Validate {
        snapshot: PathBuf,
        /// `uniform:NxM` or `q0:q1,p0:p1;...` in cell indices.
        #[arg(long, default_value = "uniform:4x4")]
        partition: String,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Simulate { config, out } => commands::simulate(config, out.as_deref()),
        Command::Triptych { config, out } => commands::triptych(config, out.as_deref()),
        Command::Sweep { config, param, values, out } => commands::sweep(config, param, values, out.as_deref()),
        Command::Validate { snapshot, partition } => commands::validate(snapshot, partition),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phaselab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
