mod common;
mod error;
mod eval;
mod gen;
mod manifest;
mod oracle;
mod svg;
mod sweep;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "agri-offload", version, about = "Smart-farm task offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Scenario TOML file; the built-in four-ABS farm when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate arrival traces.
    Gen(gen::GenArgs),
    /// Train a learner offline on stored traces.
    Train(train::TrainArgs),
    /// Evaluate policies and trained tables on fresh traces.
    Eval(eval::EvalArgs),
    /// Stress sweep over pesticide-detection processing time or deadline.
    Sweep(sweep::SweepArgs),
    /// Compare policies with the exact optimum on tiny instances.
    Oracle(oracle::OracleArgs),
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("AGRI_OFFLOAD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("AGRI_OFFLOAD_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    threads_from_env()?;
    match cli.command {
        Command::Gen(a) => gen::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Oracle(a) => oracle::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
