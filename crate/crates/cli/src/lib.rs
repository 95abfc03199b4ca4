//! `fluxcoh`: fluxonium spectra, trace fits, noise extraction, synthetic
//! data and wafer statistics from a single TOML run configuration.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for numerical solver
//! failures, 4 for non-convergence or unidentifiable parameters.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
pub mod config;
pub mod error;
mod output;

pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "fluxcoh", version, about = "Fluxonium coherence analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; overrides the config `out` key.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Only report warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Spectrum, matrix elements and dispersion across a flux grid.
    Spectrum,
    /// Fit decay traces.
    Fit,
    /// Extract tanδ_C and A_Φ from a flux scan.
    Extract,
    /// Generate synthetic data.
    Synth,
    /// Junction resistance statistics of a wafer map.
    Wafer,
    /// Frequency-normalized lifetimes and the model band.
    Zeta,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Fit => "fit",
            Command::Extract => "extract",
            Command::Synth => "synth",
            Command::Wafer => "wafer",
            Command::Zeta => "zeta",
        }
    }
}

/// Runs one subcommand and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("", "--config is required"))?;
    let cfg = LoadedConfig::load(config_path)?;
    let seed = cli.seed.unwrap_or(cfg.config.seed);
    let out_dir = match (&cli.out, &cfg.config.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => cfg.base_dir.join(o),
        (None, None) => PathBuf::from("."),
    };
    let stamp = output::Stamp {
        command: cli.command.name().to_string(),
        config_sha256: cfg.sha256.clone(),
        seed,
    };
    let mut out = output::OutputDir::create(&out_dir, stamp)?;
    match cli.command {
        Command::Spectrum => commands::spectrum::run(&cfg, &mut out)?,
        Command::Fit => commands::fit::run(&cfg, &mut out)?,
        Command::Extract => commands::extract::run(&cfg, &mut out)?,
        Command::Synth => commands::synth::run(&cfg, seed, &mut out)?,
        Command::Wafer => commands::wafer::run(&cfg, &mut out)?,
        Command::Zeta => commands::zeta::run(&cfg, &mut out)?,
    }
    Ok(out.into_written())
}
