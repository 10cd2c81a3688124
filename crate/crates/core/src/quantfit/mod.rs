//! Quantile regression on 1-D targets: the pinball loss, the three benchmark
//! distributions, network fitting with a learning-rate sweep, CRPS and
//! density recovery from the quantile function's slope.

mod dist;
mod fit;
mod loss;
mod score;

pub use dist::DistributionSpec;
pub use fit::{
    fit_distribution, lr_sweep, mse_grid, summarize_runs, summarize_sweep, FitConfig, FitReport,
    LrCell, SweepRun, SweepSummary, BENCHMARK_LRS,
};
pub use loss::{mean_quantile_loss, quantile_loss, quantile_loss_grad};
pub use score::{crps, likelihood, DensityEstimate, FnQuantile, QuantileFunction};
