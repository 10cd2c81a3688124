//! Fitting a monotonic net to samples of a target distribution.

use rand::Rng;

use super::dist::DistributionSpec;
use super::loss::{quantile_loss, quantile_loss_grad};
use super::score::QuantileFunction;
use crate::diffcore::{AdamConfig, AdamState, Parameterized};
use crate::mononet::{Architecture, MonotonicQuantileNet, NetConfig};
use crate::rng::SeedStream;
use crate::stats;

pub const BENCHMARK_LRS: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub batches: usize,
    pub batch_size: usize,
    /// MSE is evaluated at `τ = i / (grid + 1)` for `i = 1..=grid`.
    pub eval_grid: usize,
    pub adam: AdamConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            batches: 10_000,
            batch_size: 128,
            eval_grid: 99,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub architecture: Architecture,
    pub distribution: DistributionSpec,
    pub lr: f64,
    pub seed: u64,
    pub mse: f64,
    pub diverged: bool,
    /// Mean batch loss per minibatch.
    pub curve: Vec<f64>,
    pub net: MonotonicQuantileNet,
}

/// The evaluation grid `{1/(n+1), ..., n/(n+1)}`; `n = 99` gives
/// `{0.01, ..., 0.99}`.
pub fn mse_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Minimizes the mean of `ρ_τ(z − Ĝ(τ))` over minibatches with
/// `z ~ spec` and `τ ~ U[0, 1)`, one τ per sample, using Adam at a constant
/// learning rate. A non-finite loss stops training and marks the report as
/// diverged.
pub fn fit_distribution(
    spec: DistributionSpec,
    net_config: &NetConfig,
    lr: f64,
    seed: u64,
    config: &FitConfig,
) -> crate::Result<FitReport> {
    let stream = SeedStream::new(seed);
    let mut net = MonotonicQuantileNet::init_with_rng(net_config.clone(), &mut stream.substream("fit/init"))?;
    let mut targets = stream.substream("fit/targets");
    let mut taus = stream.substream("fit/taus");
    let mut adam = AdamState::new(AdamConfig { lr, ..config.adam }, &net);
    let mut scratch = net.scratch();
    let mut curve = Vec::with_capacity(config.batches);
    let mut diverged = false;
    let inv_batch = 1.0 / config.batch_size as f64;

    for _ in 0..config.batches {
        net.zero_grads();
        let prepared = net.prepare();
        let mut loss = 0.0;
        for _ in 0..config.batch_size {
            let z = spec.sample(&mut targets);
            let tau: f64 = taus.random();
            let g = net.eval(&prepared, 2.0 * tau - 1.0, None, &mut scratch);
            let delta = z - g;
            loss += quantile_loss(tau, delta);
            // d/dĜ of ρ_τ(z − Ĝ)
            let upstream = -quantile_loss_grad(tau, delta) * inv_batch;
            net.backprop(&prepared, &scratch, upstream, None);
        }
        loss *= inv_batch;
        curve.push(loss);
        if !loss.is_finite() || adam.step(&mut net, lr).is_err() {
            diverged = true;
            break;
        }
    }

    let grid = mse_grid(config.eval_grid);
    let predicted = net.quantiles(&grid);
    let mse = stats::mean(
        &grid
            .iter()
            .zip(&predicted)
            .map(|(&t, &p)| (p - spec.analytic_quantile(t)).powi(2))
            .collect::<Vec<_>>(),
    );
    diverged |= !mse.is_finite();
    Ok(FitReport {
        architecture: net_config.architecture,
        distribution: spec,
        lr,
        seed,
        mse,
        diverged,
        curve,
        net,
    })
}

/// Mean and spread of one learning rate over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct LrCell {
    pub lr: f64,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub cells: Vec<LrCell>,
    /// Index into `cells` of the lowest finite mean MSE.
    pub best: Option<usize>,
}

impl SweepSummary {
    pub fn best_cell(&self) -> Option<&LrCell> {
        self.best.map(|i| &self.cells[i])
    }
}

/// Groups reports by learning rate (in first-seen order) and picks the
/// lowest mean MSE. Learning rates with any diverged seed are not eligible.
pub fn summarize_sweep(reports: &[FitReport]) -> SweepSummary {
    let runs: Vec<SweepRun> = reports
        .iter()
        .map(|r| SweepRun {
            lr: r.lr,
            mse: r.mse,
            diverged: r.diverged,
        })
        .collect();
    summarize_runs(&runs)
}

/// The part of a [`FitReport`] that [`summarize_runs`] looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRun {
    pub lr: f64,
    pub mse: f64,
    pub diverged: bool,
}

/// [`summarize_sweep`] on already-reduced runs.
pub fn summarize_runs(runs: &[SweepRun]) -> SweepSummary {
    let mut lrs: Vec<f64> = Vec::new();
    for r in runs {
        if !lrs.contains(&r.lr) {
            lrs.push(r.lr);
        }
    }
    let cells: Vec<LrCell> = lrs
        .iter()
        .map(|&lr| {
            let group: Vec<&SweepRun> = runs.iter().filter(|r| r.lr == lr).collect();
            let mses: Vec<f64> = group.iter().map(|r| r.mse).collect();
            LrCell {
                lr,
                mean_mse: stats::mean(&mses),
                std_mse: stats::std_dev(&mses),
                diverged: group.iter().filter(|r| r.diverged).count(),
            }
        })
        .collect();
    let best = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.diverged == 0 && c.mean_mse.is_finite())
        .min_by(|a, b| a.1.mean_mse.total_cmp(&b.1.mean_mse))
        .map(|(i, _)| i);
    SweepSummary { cells, best }
}

/// Runs every `(lr, seed)` pair sequentially and summarizes.
pub fn lr_sweep(
    spec: DistributionSpec,
    net_config: &NetConfig,
    lrs: &[f64],
    seeds: &[u64],
    config: &FitConfig,
) -> crate::Result<(Vec<FitReport>, SweepSummary)> {
    let mut reports = Vec::with_capacity(lrs.len() * seeds.len());
    for &lr in lrs {
        for &seed in seeds {
            reports.push(fit_distribution(spec, net_config, lr, seed, config)?);
        }
    }
    let summary = summarize_sweep(&reports);
    Ok((reports, summary))
}
