//! Command-line front end: `solve`, `experiment` and `bounds`.

mod commands;
mod config;
mod presets;

#[cfg(test)]
mod tests;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::Completion;
pub use config::{ConfigError, ProblemSpec, Quantity, RawConfig, RunFile};
pub use presets::{preset, NAMES as PRESETS};

use crate::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_CAP: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sparareal",
    version,
    about = "Parareal and stochastic parareal experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run file with `section.key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Figure preset; replaces the problem, perturbation, solver and mc blocks.
    #[arg(long, global = true)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Run one realization and write every iterate plus the fine reference.
    Solve,
    /// Run the Monte Carlo quantities listed in `mc.quantities`.
    Experiment,
    /// Evaluate the error bounds and their constants.
    Bounds,
}

/// Why a command stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Run(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Run(e) => numeric_or_config(e),
        }
    }
}

fn numeric_or_config(e: &Error) -> u8 {
    match e {
        Error::NonFinite(_) | Error::NonFiniteState { .. } | Error::FineSweepDiverged { .. } => {
            EXIT_NUMERIC
        }
        Error::Realization { source, .. } => numeric_or_config(source),
        _ => EXIT_CONFIG,
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Merge the config file and preset into a validated run file.
pub fn load(
    config: Option<&PathBuf>,
    preset_name: Option<&str>,
    out: Option<&PathBuf>,
) -> Result<RunFile, Failure> {
    let mut raw = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                line: None,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            RawConfig::parse(&text)?
        }
        None if preset_name.is_none() => {
            return Err(ConfigError {
                line: None,
                message: "need --config or --preset".into(),
            }
            .into())
        }
        None => RawConfig::default(),
    };
    if let Some(name) = preset_name {
        let text = preset(name).ok_or_else(|| ConfigError {
            line: None,
            message: format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")),
        })?;
        raw = raw.overridden_by(&RawConfig::parse(&text).expect("presets parse"));
    }
    let mut run = RunFile::from_raw(&raw)?;
    if let Some(dir) = out {
        run.directory = dir.clone();
    }
    Ok(run)
}

fn dispatch(cli: &Cli) -> Result<Completion, Failure> {
    let run = load(cli.config.as_ref(), cli.preset.as_deref(), cli.out.as_ref())?;
    std::fs::create_dir_all(&run.directory).map_err(Error::from)?;
    let (completion, written) = match cli.command {
        Command::Solve => commands::solve(&run)?,
        Command::Experiment => (Completion::Done, commands::experiment(&run)?),
        Command::Bounds => (Completion::Done, commands::bounds(&run)?),
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(completion)
}

/// Run a parsed command line and map the outcome to an exit code.
pub fn run(cli: &Cli) -> ExitCode {
    let outcome = match cli.workers {
        Some(0) => Err(Failure::Config(ConfigError {
            line: None,
            message: "--workers must be at least 1".into(),
        })),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Failure::Config(ConfigError {
                line: None,
                message: e.to_string(),
            })),
        },
        None => dispatch(cli),
    };
    match outcome {
        Ok(Completion::Done) => ExitCode::from(EXIT_OK),
        Ok(Completion::CapReached) => ExitCode::from(EXIT_CAP),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
