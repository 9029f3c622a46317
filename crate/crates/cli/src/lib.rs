//! Command-line harness for the `expattn` library.
//!
//! Exit codes: 0 pass, 1 quantitative failure, 2 usage or config error.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] expattn::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    /// Quantitative failure, with a one-line reason.
    Fail(String),
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "expattn",
    version,
    about = "Attention as gradient ascent on a log normalizer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// RNG seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Pass/fail tolerance (gradcheck) or solver tolerance (conjugate).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form gradients and Hessians against finite differences.
    Gradcheck {
        /// Dimensions to cycle through, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5, 6, 7, 8])]
        dims: Vec<usize>,
        /// Random instances per measure variant.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Exact and sampled check of the Gaussian equilibrium of RN after A.
    Equilibrium,
    /// Trajectory of ensemble statistics under any policy.
    Dynamics,
    /// Fenchel conjugate at one dual point.
    Conjugate,
}

impl Cli {
    fn config_path(&self) -> Result<&std::path::Path, CliError> {
        self.config
            .as_deref()
            .ok_or_else(|| CliError::config("--config is required for this command"))
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Gradcheck { dims, trials } => {
            let seed = cli
                .seed
                .ok_or_else(|| CliError::config("--seed is required"))?;
            let tol = cli.tol.unwrap_or(commands::gradcheck::DEFAULT_TOL);
            commands::gradcheck::run(dims, *trials, seed, tol, &cli.out)
        }
        Command::Equilibrium => {
            let cfg = load_experiment(cli)?;
            commands::equilibrium::run(&cfg, &cli.out)
        }
        Command::Dynamics => {
            let cfg = load_experiment(cli)?;
            commands::dynamics::run(&cfg, &cli.out)
        }
        Command::Conjugate => {
            let cfg = config::ConjugateConfig::load(cli.config_path()?)?;
            let tol = cli.tol.unwrap_or(commands::conjugate::DEFAULT_TOL);
            commands::conjugate::run(&cfg, tol, &cli.out)
        }
    }
}

fn load_experiment(cli: &Cli) -> Result<config::ExperimentConfig, CliError> {
    let mut cfg = config::ExperimentConfig::load(cli.config_path()?)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}
