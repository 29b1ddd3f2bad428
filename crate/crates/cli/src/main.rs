mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{asymptotics, fig2, k0, optimize, predict, selftest, simulate};

/// Free-probability predictions and random-matrix checks for random
/// quantum channels.
///
/// Exit codes: 0 success, 2 invalid input, 3 resource guard exceeded,
/// 4 numerical failure or failed self-test, 1 I/O error.
#[derive(Debug, Parser)]
#[command(name = "freechan", version)]
struct Cli {
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true, env = "FREECHAN_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Limiting spectra, entropies, violation margins and Schatten limits.
    Predict(predict::PredictArgs),
    /// Seeded Monte-Carlo trials over random channels or projector pairs.
    Simulate(simulate::SimulateArgs),
    /// Smallest k with an additivity violation, over a (t, p) grid.
    K0Table(k0::K0Args),
    /// Boundary polygons of S(β^(t)) in the k = 3 simplex for t = 1/k'.
    Fig2Data(fig2::Fig2Args),
    /// Exact entropies against the t = k^(-α) expansions.
    Asymptotics(asymptotics::AsymptoticsArgs),
    /// Maximal Schmidt partial sum or minimum output Rényi entropy.
    Optimize(optimize::OptimizeArgs),
    /// Runs the built-in acceptance checks.
    Selftest(selftest::SelftestArgs),
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(error::CliError::Validation("--workers must be positive".into()));
    }
    // Ignored if a pool already exists.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    match cli.command {
        Command::Predict(a) => predict::run(a),
        Command::Simulate(a) => simulate::run(a, workers),
        Command::K0Table(a) => k0::run(a),
        Command::Fig2Data(a) => fig2::run(a),
        Command::Asymptotics(a) => asymptotics::run(a),
        Command::Optimize(a) => optimize::run(a),
        Command::Selftest(a) => selftest::run(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("freechan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
