//! Binary entry point: parses flags, loads the config file, applies
//! overrides, dispatches to the command implementations, and maps errors to
//! a nonzero exit code.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mvjump::cli;
use mvjump::config::Settings;

#[derive(Parser)]
#[command(
    name = "mvjump",
    version,
    about = "Jump-diffusion portfolio lab: calibrate, train, simulate, evaluate, backtest"
)]
struct Args {
    /// Configuration file (INI-style `[section]` / `key = value`).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides `run.seed` from the config file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory for artifacts (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override one config value (repeatable), e.g. `--set run.n_epochs=500`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate jump-diffusion parameters from a price CSV.
    Fit,
    /// Run the training loop and write the trace plus final parameters.
    Train,
    /// Write simulated stock or wealth paths as CSV columns.
    Simulate,
    /// Monte-Carlo performance across a list of risk aversions.
    Evaluate,
    /// Rolling-window calibrate, train, and replay over historical data.
    Backtest,
}

fn run(args: &Args) -> mvjump::Result<Vec<PathBuf>> {
    let mut settings = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::empty(),
    };
    for pair in &args.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            mvjump::Error::Config(format!("--set {pair:?}: expected SECTION.KEY=VALUE"))
        })?;
        settings.set(key.trim(), value.trim().to_string());
    }
    if let Some(seed) = args.seed {
        settings.set("run.seed", seed.to_string());
    }
    std::fs::create_dir_all(&args.out)?;
    match args.command {
        Command::Fit => cli::cmd_fit(&settings, &args.out),
        Command::Train => cli::cmd_train(&settings, &args.out),
        Command::Simulate => cli::cmd_simulate(&settings, &args.out),
        Command::Evaluate => cli::cmd_evaluate(&settings, &args.out),
        Command::Backtest => cli::cmd_backtest(&settings, &args.out),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(paths) => {
            for path in paths {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
