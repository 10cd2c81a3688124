//! Result files: per-seed CSVs, checkpoints and `summary.json`.
//!
//! Layout under the output directory:
//!
//! ```text
//! config.json  summary.json
//! fitbench.csv  predictions.csv             (fitbench)
//! curves/<learner>_seed<s>.csv              (rps, choice)
//! actions/<learner>_seed<s>.csv
//! histograms/<learner>_seed<s>.csv
//! checkpoints/...
//! ```
//!
//! Every number in `summary.json` can be recomputed from the CSVs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use qrpolicy_core::envs::Histogram;
use qrpolicy_core::stats;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::experiments::{button_masses, ChoiceResult, FitbenchResult, Learner, RpsResult};

/// Floor (relative to the peak bin) of the modal lobe reported for Choice.
pub const LOBE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Series name to one value per seed, in `seeds` order.
    pub per_seed: BTreeMap<String, Vec<f64>>,
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

impl Summary {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment,
            config_hash: config.hash(),
            seeds: config.seeds.clone(),
            per_seed: BTreeMap::new(),
            mean: BTreeMap::new(),
            std: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, series: impl Into<String>, values: Vec<f64>) {
        if values.is_empty() {
            return;
        }
        let name = series.into();
        self.mean.insert(name.clone(), stats::mean(&values));
        self.std.insert(name.clone(), stats::std_dev(&values));
        self.per_seed.insert(name, values);
    }
}

pub enum Outcome {
    Fitbench(FitbenchResult),
    Rps(RpsResult),
    Choice(ChoiceResult),
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn seed_file(out: &Path, kind: &str, learner: Learner, seed: u64) -> PathBuf {
    out.join(kind).join(format!("{}_seed{seed}.csv", learner.name()))
}

fn write_actions(path: &Path, actions: &[f64]) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "action")?;
    for a in actions {
        writeln!(w, "{a}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_histogram(path: &Path, h: &Histogram) -> anyhow::Result<()> {
    let mut w = create(path)?;
    h.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes every result file and returns the summary that was written.
pub fn write_outputs(config: &ExperimentConfig, outcome: &Outcome) -> anyhow::Result<Summary> {
    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    write_bytes(&out.join("config.json"), serde_json::to_string_pretty(config)?.as_bytes())?;
    let summary = match outcome {
        Outcome::Fitbench(r) => write_fitbench(config, r)?,
        Outcome::Rps(r) => write_rps(config, r)?,
        Outcome::Choice(r) => write_choice(config, r)?,
    };
    write_bytes(&out.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

fn write_fitbench(config: &ExperimentConfig, result: &FitbenchResult) -> anyhow::Result<Summary> {
    let out = &config.out;
    let mut w = create(&out.join("fitbench.csv"))?;
    writeln!(w, "architecture,distribution,lr,seed,mse,diverged")?;
    for r in &result.rows {
        writeln!(w, "{},{},{},{},{},{}", r.architecture, r.distribution, r.lr, r.seed, r.mse, r.diverged)?;
    }
    w.flush()?;

    let mut w = create(&out.join("predictions.csv"))?;
    writeln!(w, "architecture,distribution,seed,tau,predicted,analytic")?;
    for r in result.best_rows() {
        for &(tau, g) in &r.predictions {
            let truth = r.distribution.analytic_quantile(tau);
            writeln!(w, "{},{},{},{tau},{g},{truth}", r.architecture, r.distribution, r.seed)?;
        }
        let name = format!("{}_{}_seed{}.ckpt", r.architecture, r.distribution, r.seed);
        write_bytes(&out.join("checkpoints").join(name), &r.net_checkpoint)?;
    }
    w.flush()?;

    let mut summary = Summary::new(config);
    for c in &result.cells {
        summary.insert(format!("{}/{}", c.architecture, c.distribution), c.mses.clone());
    }
    Ok(summary)
}

fn write_rps(config: &ExperimentConfig, result: &RpsResult) -> anyhow::Result<Summary> {
    let out = &config.out;
    let window = config.rps.smoothing;
    for run in &result.runs {
        let mut w = create(&seed_file(out, "curves", run.learner, run.seed))?;
        writeln!(w, "iteration,return,smoothed")?;
        for (i, (r, s)) in run.returns.iter().zip(run.smoothed(window)).enumerate() {
            writeln!(w, "{i},{r},{s}")?;
        }
        w.flush()?;
        write_actions(&seed_file(out, "actions", run.learner, run.seed), &run.actions)?;
        let mut h = Histogram::rps();
        h.extend(run.actions.iter().copied());
        write_histogram(&seed_file(out, "histograms", run.learner, run.seed), &h)?;
        let name = format!("{}_seed{}.ckpt", run.learner.name(), run.seed);
        write_bytes(&out.join("checkpoints").join(name), &run.checkpoint)?;
    }

    let mut summary = Summary::new(config);
    for learner in [Learner::Quantile, Learner::Gaussian] {
        let runs: Vec<_> = result.of(learner).collect();
        let name = learner.name();
        summary.insert(
            format!("{name}/final_return"),
            runs.iter().map(|r| r.final_return(window, config.rps.final_window)).collect(),
        );
        let masses: Vec<[f64; 3]> = runs.iter().map(|r| rps_masses(config, &r.actions)).collect();
        for (i, mv) in ["rock", "paper", "scissors"].iter().enumerate() {
            summary.insert(format!("{name}/{mv}_mass"), masses.iter().map(|m| m[i]).collect());
        }
        summary.insert(
            format!("{name}/valid_mass"),
            masses.iter().map(|m| m.iter().sum()).collect(),
        );
    }
    Ok(summary)
}

/// Rock, paper and scissors interval masses of `actions`.
pub fn rps_masses(config: &ExperimentConfig, actions: &[f64]) -> [f64; 3] {
    config
        .rps
        .space
        .intervals()
        .map(|(_, lo, hi)| qrpolicy_core::envs::interval_mass(actions, lo, hi))
}

fn write_choice(config: &ExperimentConfig, result: &ChoiceResult) -> anyhow::Result<Summary> {
    let out = &config.out;
    for run in &result.runs {
        let mut w = create(&seed_file(out, "curves", run.learner, run.seed))?;
        writeln!(w, "update,env_steps,mean_return,policy_loss,value_loss")?;
        for c in &run.curve {
            writeln!(
                w,
                "{},{},{},{},{}",
                c.update_index, c.env_steps, c.mean_return, c.policy_loss, c.value_loss
            )?;
        }
        w.flush()?;
        write_actions(&seed_file(out, "actions", run.learner, run.seed), &run.actions)?;
        write_histogram(&seed_file(out, "histograms", run.learner, run.seed), &run.histogram())?;
        let name = format!("{}_seed{}.ckpt", run.learner.name(), run.seed);
        write_bytes(&out.join("checkpoints").join(name), &run.checkpoint)?;
    }

    let mut summary = Summary::new(config);
    for learner in [Learner::Qrdrl, Learner::Ppo] {
        let runs: Vec<_> = result.of(learner).collect();
        let name = learner.name();
        summary.insert(format!("{name}/final_return"), runs.iter().map(|r| r.final_return()).collect());
        let masses: Vec<(f64, f64)> = runs.iter().map(|r| button_masses(config, &r.actions)).collect();
        summary.insert(format!("{name}/button_a_mass"), masses.iter().map(|m| m.0).collect());
        summary.insert(format!("{name}/button_b_mass"), masses.iter().map(|m| m.1).collect());
        summary.insert(
            format!("{name}/lobe_mass"),
            runs.iter().map(|r| r.histogram().modal_lobe_mass(LOBE_FLOOR)).collect(),
        );
    }
    Ok(summary)
}
