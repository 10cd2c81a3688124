//! The three experiment families. Each `run_*` function fans seeds out to
//! the rayon pool and returns plain data; writing files is left to
//! [`crate::output`].

use anyhow::Context;
use qrpolicy_core::envs::{
    interval_mass, train_rps, Choice, GaussianPlayer, Histogram, QuantilePlayer, RpsPlayer,
};
use qrpolicy_core::mononet::NetConfig;
use qrpolicy_core::quantfit::{fit_distribution, mse_grid, summarize_runs, FitConfig, SweepRun};
use qrpolicy_core::rlcore::{train_ppo, train_qrdrl, CurvePoint, PpoHyper};
use qrpolicy_core::quantfit::QuantileFunction;
use qrpolicy_core::{stats, Architecture, DistributionSpec, SeedStream};
use rayon::prelude::*;

use crate::config::ExperimentConfig;

/// One fitted network, reduced to what the tables and plots need.
#[derive(Debug, Clone)]
pub struct FitRow {
    pub architecture: Architecture,
    pub distribution: DistributionSpec,
    pub lr: f64,
    pub seed: u64,
    pub mse: f64,
    pub diverged: bool,
    /// `(τ, Ĝ(τ))` on the MSE grid.
    pub predictions: Vec<(f64, f64)>,
    pub net_checkpoint: Vec<u8>,
}

/// Best learning rate of one architecture/distribution pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FitCell {
    pub architecture: Architecture,
    pub distribution: DistributionSpec,
    pub best_lr: Option<f64>,
    /// Per-seed MSE at the best learning rate, in seed order.
    pub mses: Vec<f64>,
    pub mean_mse: f64,
    pub std_mse: f64,
}

#[derive(Debug, Clone)]
pub struct FitbenchResult {
    pub rows: Vec<FitRow>,
    pub cells: Vec<FitCell>,
}

impl FitbenchResult {
    pub fn cell(&self, architecture: Architecture, distribution: DistributionSpec) -> Option<&FitCell> {
        self.cells
            .iter()
            .find(|c| c.architecture == architecture && c.distribution == distribution)
    }

    /// Rows at each cell's best learning rate.
    pub fn best_rows(&self) -> impl Iterator<Item = &FitRow> {
        self.rows.iter().filter(|r| {
            self.cell(r.architecture, r.distribution)
                .and_then(|c| c.best_lr)
                .is_some_and(|lr| lr == r.lr)
        })
    }
}

pub fn net_config(config: &ExperimentConfig, architecture: Architecture) -> NetConfig {
    let net = NetConfig::benchmark(architecture);
    match architecture {
        Architecture::MaxMin => net.with_groups(config.fitbench.maxmin_groups),
        _ => net,
    }
}

pub fn run_fitbench(config: &ExperimentConfig) -> anyhow::Result<FitbenchResult> {
    let fb = &config.fitbench;
    let fit = FitConfig {
        batches: fb.batches,
        batch_size: fb.batch_size,
        adam: qrpolicy_core::diffcore::AdamConfig {
            eps: config.hyper.adam_eps,
            ..FitConfig::default().adam
        },
        ..FitConfig::default()
    };
    let mut jobs = Vec::new();
    for &arch in &fb.architectures {
        for &dist in &fb.distributions {
            for &lr in &fb.lrs {
                for &seed in &config.seeds {
                    jobs.push((arch, dist, lr, seed));
                }
            }
        }
    }
    let grid = mse_grid(fit.eval_grid);
    let rows = jobs
        .par_iter()
        .map(|&(arch, dist, lr, seed)| -> anyhow::Result<FitRow> {
            let report = fit_distribution(dist, &net_config(config, arch), lr, seed, &fit)
                .with_context(|| format!("fitting {arch}/{dist} lr={lr} seed={seed}"))?;
            let predictions = grid.iter().copied().zip(report.net.quantiles(&grid)).collect();
            let mut net_checkpoint = Vec::new();
            report.net.save(&mut net_checkpoint)?;
            Ok(FitRow {
                architecture: arch,
                distribution: dist,
                lr,
                seed,
                mse: report.mse,
                diverged: report.diverged,
                predictions,
                net_checkpoint,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for &arch in &fb.architectures {
        for &dist in &fb.distributions {
            let group: Vec<&FitRow> = rows
                .iter()
                .filter(|r| r.architecture == arch && r.distribution == dist)
                .collect();
            let runs: Vec<SweepRun> = group
                .iter()
                .map(|r| SweepRun {
                    lr: r.lr,
                    mse: r.mse,
                    diverged: r.diverged,
                })
                .collect();
            let summary = summarize_runs(&runs);
            let best_lr = summary.best_cell().map(|c| c.lr);
            let mses: Vec<f64> = group
                .iter()
                .filter(|r| Some(r.lr) == best_lr)
                .map(|r| r.mse)
                .collect();
            cells.push(FitCell {
                architecture: arch,
                distribution: dist,
                best_lr,
                mean_mse: stats::mean(&mses),
                std_mse: stats::std_dev(&mses),
                mses,
            });
        }
    }
    Ok(FitbenchResult { rows, cells })
}

/// Which trainee an RPS or Choice series belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Learner {
    Quantile,
    Gaussian,
    Qrdrl,
    Ppo,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::Quantile => "quantile",
            Learner::Gaussian => "gaussian",
            Learner::Qrdrl => "qrdrl",
            Learner::Ppo => "ppo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RpsRun {
    pub learner: Learner,
    pub seed: u64,
    /// Mean trainee return of each iteration's evaluation games.
    pub returns: Vec<f64>,
    /// Actions sampled from the final policy at the zero state.
    pub actions: Vec<f64>,
    pub checkpoint: Vec<u8>,
}

impl RpsRun {
    pub fn smoothed(&self, window: usize) -> Vec<f64> {
        stats::trailing_moving_average(&self.returns, window)
    }

    /// Mean of the smoothed return over the last `tail` iterations.
    pub fn final_return(&self, window: usize, tail: usize) -> f64 {
        let s = self.smoothed(window);
        stats::mean(&s[s.len().saturating_sub(tail)..])
    }
}

#[derive(Debug, Clone)]
pub struct RpsResult {
    pub runs: Vec<RpsRun>,
}

impl RpsResult {
    pub fn of(&self, learner: Learner) -> impl Iterator<Item = &RpsRun> {
        self.runs.iter().filter(move |r| r.learner == learner)
    }
}

#[derive(serde::Serialize)]
struct CheckpointHeader<'a> {
    learner: &'a str,
    seed: u64,
    config_hash: &'a str,
}

fn checkpoint<P: qrpolicy_core::diffcore::Parameterized>(
    learner: Learner,
    seed: u64,
    hash: &str,
    model: &P,
) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let header = CheckpointHeader {
        learner: learner.name(),
        seed,
        config_hash: hash,
    };
    qrpolicy_core::diffcore::write_checkpoint(&mut buf, &header, model)?;
    Ok(buf)
}

fn rps_run(config: &ExperimentConfig, learner: Learner, seed: u64, hash: &str) -> anyhow::Result<RpsRun> {
    let rps = &config.rps;
    let seeds = SeedStream::new(seed);
    let mut init = seeds.substream("policy/init");
    let counter = config.rps_counter();
    let iterations = config.rps_iterations();
    let mut sample_rng = seeds.substream("histogram");
    let sample = |p: &dyn RpsPlayer, rng: &mut _| -> anyhow::Result<Vec<f64>> {
        (0..rps.histogram_samples)
            .map(|_| Ok(p.act([0.0, 0.0], rng)?))
            .collect()
    };
    let (returns, actions, checkpoint) = match learner {
        Learner::Quantile => {
            let mut p = QuantilePlayer::new(rps.quantile_width, rps.trainee, &mut init)?;
            let returns = train_rps(&mut p, &rps.space, &counter, iterations, &seeds)?;
            let actions = sample(&p, &mut sample_rng)?;
            (returns, actions, checkpoint(learner, seed, hash, &p.policy)?)
        }
        Learner::Gaussian => {
            let mut p = GaussianPlayer::new(rps.gaussian_hidden, rps.trainee, &mut init)?;
            let returns = train_rps(&mut p, &rps.space, &counter, iterations, &seeds)?;
            let actions = sample(&p, &mut sample_rng)?;
            (returns, actions, checkpoint(learner, seed, hash, &p.policy)?)
        }
        other => anyhow::bail!("{} does not play rock-paper-scissors", other.name()),
    };
    Ok(RpsRun {
        learner,
        seed,
        returns,
        actions,
        checkpoint,
    })
}

pub fn run_rps(config: &ExperimentConfig) -> anyhow::Result<RpsResult> {
    let hash = config.hash();
    let jobs: Vec<(Learner, u64)> = [Learner::Quantile, Learner::Gaussian]
        .into_iter()
        .flat_map(|l| config.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(learner, seed)| {
            rps_run(config, learner, seed, &hash).with_context(|| format!("rps {} seed {seed}", learner.name()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(RpsResult { runs })
}

#[derive(Debug, Clone)]
pub struct ChoiceRun {
    pub learner: Learner,
    pub seed: u64,
    pub curve: Vec<CurvePoint>,
    pub actions: Vec<f64>,
    pub aborted: Option<String>,
    pub checkpoint: Vec<u8>,
}

impl ChoiceRun {
    /// Mean episode return over the last tenth of the curve.
    pub fn final_return(&self) -> f64 {
        final_tenth(&self.curve.iter().map(|c| c.mean_return).collect::<Vec<_>>())
    }

    pub fn histogram(&self) -> Histogram {
        let mut h = Histogram::choice();
        h.extend(self.actions.iter().copied());
        h
    }
}

pub fn final_tenth(values: &[f64]) -> f64 {
    let n = values.len();
    stats::mean(&values[n - (n / 10).max(1).min(n)..])
}

#[derive(Debug, Clone)]
pub struct ChoiceResult {
    pub runs: Vec<ChoiceRun>,
}

impl ChoiceResult {
    pub fn of(&self, learner: Learner) -> impl Iterator<Item = &ChoiceRun> {
        self.runs.iter().filter(move |r| r.learner == learner)
    }

    pub fn aborted(&self) -> impl Iterator<Item = &ChoiceRun> {
        self.runs.iter().filter(|r| r.aborted.is_some())
    }
}

/// Masses of the two button intervals in `actions`.
pub fn button_masses(config: &ExperimentConfig, actions: &[f64]) -> (f64, f64) {
    let env = &config.choice.env;
    (
        interval_mass(actions, env.button_a.0, env.button_a.1),
        interval_mass(actions, env.button_b.0, env.button_b.1),
    )
}

fn choice_run(config: &ExperimentConfig, learner: Learner, seed: u64, hash: &str) -> anyhow::Result<ChoiceRun> {
    let env = Choice::new(config.choice.env.clone())?;
    let steps = config.choice_steps();
    let obs = Choice::observation();
    let mut rng = SeedStream::new(seed).substream("histogram");
    let n = config.choice.histogram_samples;
    let first = |v: Vec<Vec<f64>>| v.into_iter().map(|a| a[0]).collect::<Vec<_>>();
    let run = match learner {
        Learner::Qrdrl => {
            let out = train_qrdrl(env, &config.hyper, steps, seed)?;
            ChoiceRun {
                learner,
                seed,
                actions: first(out.policy.sample_actions(&obs, n, &mut rng)?),
                checkpoint: checkpoint(learner, seed, hash, &out.policy)?,
                curve: out.curve,
                aborted: out.aborted,
            }
        }
        Learner::Ppo => {
            let hyper = PpoHyper {
                schedule: config.hyper.clone(),
                clip: config.choice.clip,
            };
            let out = train_ppo(env, &hyper, steps, seed)?;
            ChoiceRun {
                learner,
                seed,
                actions: first(out.policy.sample_actions(&obs, n, &mut rng)?),
                checkpoint: checkpoint(learner, seed, hash, &out.policy)?,
                curve: out.curve,
                aborted: out.aborted,
            }
        }
        other => anyhow::bail!("{} does not play choice", other.name()),
    };
    Ok(run)
}

pub fn run_choice(config: &ExperimentConfig) -> anyhow::Result<ChoiceResult> {
    let hash = config.hash();
    let jobs: Vec<(Learner, u64)> = [Learner::Qrdrl, Learner::Ppo]
        .into_iter()
        .flat_map(|l| config.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(learner, seed)| {
            choice_run(config, learner, seed, &hash).with_context(|| format!("choice {} seed {seed}", learner.name()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(ChoiceResult { runs })
}
