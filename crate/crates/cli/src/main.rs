//! Command-line driver: training runs, the two-cluster stress experiment,
//! and grid search with metric emission.

mod common;
mod counterexample;
mod grid;
mod train;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "dplinear",
    version,
    about = "Differentially private linear classification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and append a metrics row plus a run manifest.
    Train(train::TrainArgs),
    /// Monte-Carlo comparison of the two trainers on the two-cluster
    /// instance whose feature norms dwarf its diameter.
    Counterexample(counterexample::CounterexampleArgs),
    /// Exhaustive grid search over batch size, learning rate, epochs (and
    /// preprocessing budget for dpsgdf), with resume support.
    Grid(grid::GridArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => train::run(args),
        Command::Counterexample(args) => counterexample::run(args),
        Command::Grid(args) => grid::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
