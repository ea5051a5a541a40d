//! `atrpp`: reproducible experiment driver for temporal point process
//! modeling. Subcommands: simulate | train | eval | baselines | infectivity.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atrpp::Error;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "atrpp", version, about = "Temporal point process experiments: simulate, train, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file: sectioned key/value text, a config JSON, or a manifest
    /// JSON from a previous run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for simulation and evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for checkpoints, reports, and manifests.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multivariate-Hawkes dataset with ground truth.
    Simulate,
    /// Train the attentional twin-LSTM model on the dataset.
    Train,
    /// Evaluate a trained checkpoint on the test split.
    Eval,
    /// Fit and evaluate the classical baselines on the same splits.
    Baselines,
    /// Export the trained model's infectivity estimate as CSV and DOT.
    Infectivity,
}

fn run(cli: Cli) -> atrpp::Result<()> {
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool can only be built once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli
        .seed
        .or(config.run.seed)
        .ok_or_else(|| Error::Config("seed is mandatory: set [run] seed or pass --seed".into()))?;
    config.run.seed = Some(seed);

    match cli.command {
        Command::Simulate => commands::cmd_simulate(&config, seed, &cli.out),
        Command::Train => commands::cmd_train(&config, seed, &cli.out),
        Command::Eval => commands::cmd_eval(&config, seed, &cli.out),
        Command::Baselines => commands::cmd_baselines(&config, seed, &cli.out),
        Command::Infectivity => commands::cmd_infectivity(&config, seed, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) => 1,
                Error::Io(_) | Error::Parse { .. } | Error::Data(_) | Error::Shape(_) => 2,
                Error::Numeric(_) | Error::Unstable(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}
