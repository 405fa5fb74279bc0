mod commands;
mod configs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lsep", version, about = "Simulation, dependence measures, estimators and Monte Carlo checks for locally stationary processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and write it as CSV
    Simulate(Common),
    /// Tabulate Monte Carlo dependence measures next to the analytic bound
    Depmeasure(Common),
    /// Run a localized estimator on a simulated path
    Estimate(Common),
    /// Run a Monte Carlo experiment and write its report
    Verify(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML config file
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory
    #[arg(long, short, env = "LSEP_OUTPUT_DIR", default_value = "lsep-out")]
    output_dir: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Depmeasure(c) => ("depmeasure", c),
        Command::Estimate(c) => ("estimate", c),
        Command::Verify(c) => ("verify", c),
    };
    let code = commands::dispatch(name, common);
    ExitCode::from(code)
}
