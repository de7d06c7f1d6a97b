use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use copulagraph::cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(name = "copulagraph", version, about = "Graph structure learning for mixed data")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic data sets with known graphs
    Simulate(Common),
    /// Run the sampler on a data set or a simulation directory
    Fit(Common),
    /// Score fits against the true graphs
    Eval(Common),
    /// Posterior predictive checks
    Ppc(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let (cmd, c) = match Args::parse().command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Fit(c) => (Command::Fit, c),
        Cmd::Eval(c) => (Command::Eval, c),
        Cmd::Ppc(c) => (Command::Ppc, c),
    };
    let overrides = Overrides {
        seed: c.seed,
        iterations: c.iterations,
        burn_in: c.burn_in,
        threshold: c.threshold,
        jobs: c.jobs,
    };
    match run(cmd, &c.config, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
