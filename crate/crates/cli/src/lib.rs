//! Command-line front end for `regen-core`.
//!
//! Each subcommand reads a flat TOML config; `--seed` and `--out` override the
//! `seed` and `out` keys.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "regen", version, about = "Clustering indices of regenerative processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Path to the TOML config.
    pub config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path, overriding the config; stdout when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a sample path in the trajectory text format.
    Simulate(RunArgs),
    /// Exceedance indices per level and q.
    Indices(RunArgs),
    /// Constant-symbol cylinder indices per pattern length.
    Cylinder(RunArgs),
    /// Renewal sequence of regenerations.
    Decay(RunArgs),
    /// Validation grid and errata report (JSON); exits 1 when a check fails.
    Validate(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Simulate(a) => ("simulate", a),
            Command::Indices(a) => ("indices", a),
            Command::Cylinder(a) => ("cylinder", a),
            Command::Decay(a) => ("decay", a),
            Command::Validate(a) => ("validate", a),
        }
    }
}

pub fn run(command: &Command) -> CliResult<()> {
    let (name, args) = command.parts();
    let cfg = ExperimentConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or_else(|| cfg.seed_or_default());
    let out: Option<PathBuf> = args.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
    let (text, failures) = match command {
        Command::Simulate(_) => (commands::simulate(&cfg, seed)?, 0),
        Command::Indices(_) => (commands::indices(&cfg, seed)?, 0),
        Command::Cylinder(_) => (commands::cylinder(&cfg, seed)?, 0),
        Command::Decay(_) => (commands::decay(&cfg, seed)?, 0),
        Command::Validate(_) => {
            let report = validate::run_validation(&validate::ValidateSettings::from_config(&cfg, seed))?;
            (validate::report_json(&report), report.failed_checks().len())
        }
    };
    output::emit(&text, out.as_deref(), name, Path::new(&args.config), seed)?;
    if failures > 0 {
        return Err(CliError::ValidationFailed(failures));
    }
    Ok(())
}
