//! Experiment harness for monotonic quantile networks and quantile-regression
//! policy learning: the distribution-fitting benchmark, continuous
//! Rock-Paper-Scissors and the Choice game.
//!
//! [`run`] executes one experiment for every configured seed and writes the
//! result directory; [`plotdata::plotdata`] turns a result directory into
//! mean/std bands.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plotdata;

pub use config::{Experiment, ExperimentConfig, Scale};
pub use output::Summary;

use experiments::{run_choice, run_fitbench, run_rps};
use output::{write_outputs, Outcome};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    /// `"<learner> seed <s>: <reason>"` for every run that stopped early.
    pub aborted: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.aborted.is_empty() {
            0
        } else {
            1
        }
    }
}

pub fn run(config: &ExperimentConfig) -> anyhow::Result<RunReport> {
    config.validate()?;
    let mut aborted = Vec::new();
    let outcome = match config.experiment {
        Experiment::Fitbench => Outcome::Fitbench(run_fitbench(config)?),
        Experiment::Rps => Outcome::Rps(run_rps(config)?),
        Experiment::Choice => {
            let result = run_choice(config)?;
            for r in result.aborted() {
                let reason = r.aborted.as_deref().unwrap_or_default();
                aborted.push(format!("{} seed {}: {reason}", r.learner.name(), r.seed));
            }
            Outcome::Choice(result)
        }
    };
    let summary = write_outputs(config, &outcome)?;
    Ok(RunReport { summary, aborted })
}
