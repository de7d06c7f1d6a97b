//! Config-file driven commands behind the `copulagraph` binary.

mod commands;
pub mod config;
pub mod io;

use std::path::Path;

pub use commands::{fit_one, mean_sd, parse_check, parse_scenarios, replicate_stream, SavedStates, Scenario};
pub use config::Config;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Eval,
    Ppc,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub threshold: Option<f64>,
    pub jobs: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut Config) {
        if let Some(v) = self.seed {
            cfg.set("seed", v);
        }
        if let Some(v) = self.iterations {
            cfg.set("iterations", v);
        }
        if let Some(v) = self.burn_in {
            cfg.set("burn_in", v);
        }
        if let Some(v) = self.threshold {
            cfg.set("threshold", v);
        }
        if let Some(v) = self.jobs {
            cfg.set("jobs", v);
        }
    }
}

pub fn run(cmd: Command, config_path: &Path, overrides: &Overrides) -> Result<()> {
    let mut cfg = Config::load(config_path)?;
    overrides.apply(&mut cfg);
    match cmd {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Eval => commands::cmd_eval(&cfg),
        Command::Ppc => commands::cmd_ppc(&cfg),
    }
}
