//! `wigner1d` — batch front-end for the solver stacks: configured single
//! runs, parameter sweeps, checkpoint resumption, and density comparison.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 solver or
//! artifact failure.

mod compare;
mod config;
mod runner;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::sweep::SweepParam;

/// Failure of a CLI operation, split by who has to act: `Config` means the
/// inputs must change (exit 2), `Run` means the solver or the filesystem
/// failed (exit 3).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Run(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "wigner1d", version, about = "Few-electron solver driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Replace the config's candidate-stream seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Replace the pair-kernel quadrature tolerance (ecg methods).
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Replace the self-consistency tolerance (dft).
    #[arg(long)]
    scf_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured run and write its artifacts.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a template config across a list of parameter values.
    Sweep {
        /// TOML run configuration used as the template.
        #[arg(long)]
        config: PathBuf,
        /// The parameter the sweep varies.
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Continue an interrupted or finished optimization from its
    /// checkpoint, then write a full artifact set.
    Resume {
        /// A `checkpoint.toml` written by a previous run.
        checkpoint: PathBuf,
        /// Directory for the resumed artifacts; defaults to the
        /// checkpoint's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare two exported density files peak by peak.
    Compare {
        /// First density CSV (e.g. a correlated run).
        a: PathBuf,
        /// Second density CSV (e.g. a mean-field run).
        b: PathBuf,
        /// Also write `compare.toml` into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Applies command-line overrides onto a loaded config, re-validating the
/// result so an override cannot smuggle in an inconsistent state.
fn apply_overrides(mut config: RunConfig, ov: &Overrides) -> Result<RunConfig, CliError> {
    if let Some(seed) = ov.seed {
        config.seed = Some(seed);
    }
    if let Some(dir) = &ov.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(tol) = ov.quad_tol {
        if !config.method.is_stochastic() {
            return Err(CliError::Config(
                "--quad-tol only applies to ecg methods".into(),
            ));
        }
        let mut opt = config.optimizer.take().unwrap_or_default();
        opt.quad_tol = tol;
        config.optimizer = Some(opt);
    }
    if let Some(tol) = ov.scf_tol {
        if config.method != config::Method::Dft {
            return Err(CliError::Config("--scf-tol only applies to method \"dft\"".into()));
        }
        let mut scf = config.scf.take().unwrap_or_default();
        scf.tol = tol;
        config.scf = Some(scf);
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let config = apply_overrides(RunConfig::load(&config)?, &overrides)?;
            let summary = runner::execute_run(&config)?;
            println!(
                "{}: E = {:.9} ({} written)",
                summary.method,
                summary.energy,
                config.out_dir.join("summary.toml").display()
            );
            Ok(())
        }
        Command::Sweep { config, param, values, overrides } => {
            let template = apply_overrides(RunConfig::load(&config)?, &overrides)?;
            let failures = sweep::execute_sweep(&template, param, &values)?;
            println!(
                "swept {} over {} points ({} written)",
                param.label(),
                values.len(),
                template.out_dir.join("sweep.csv").display()
            );
            if failures > 0 {
                return Err(CliError::Run(format!(
                    "{failures} of {} sweep points failed",
                    values.len()
                )));
            }
            Ok(())
        }
        Command::Resume { checkpoint, out_dir } => {
            let summary = runner::execute_resume(&checkpoint, out_dir)?;
            println!("{}: E = {:.9} (resumed)", summary.method, summary.energy);
            Ok(())
        }
        Command::Compare { a, b, out_dir } => compare::execute_compare(&a, &b, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
