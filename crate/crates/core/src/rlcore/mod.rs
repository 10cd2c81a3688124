//! Advantage-weighted quantile-regression policy learning.
//!
//! The agent acts by sampling `τ ~ U[0,1)^d` and emitting `Ĝ(τ, φ(s))`. After
//! each rollout it estimates advantages with GAE, normalizes them over the
//! batch, and for a few epochs of shuffled minibatches minimizes
//!
//! ```text
//! L = mean over tuples, K fresh τ draws and action dims of
//!     (A + β) · ρ_τ(a − Ĝ(τ, φ(s)))
//! ```
//!
//! A negative weight `A + β < 0` ascends the quantile loss; the monotonic
//! architecture keeps `Ĝ` a valid quantile function regardless.
//!
//! Also here: the value critic, the Gaussian policies used as baselines and
//! opponents, and a clipped-surrogate PPO baseline.

mod critic;
mod env;
mod gae;
mod gaussian;
mod policy;
mod ppo;
mod qrdrl;
mod train;

pub use critic::{critic_loss, ValueCritic};
pub use env::{Environment, StepOutcome};
pub use gae::{gae, normalize_advantages, AdvantageEstimates};
pub use gaussian::{
    gaussian_log_prob, gaussian_pg_update, GaussianPolicy, GaussianSample, LOG_STD_MAX, LOG_STD_MIN,
};
pub use policy::QuantilePolicy;
pub use ppo::{
    clipped_surrogate, ppo_baseline_update, train_ppo, GaussianMlpPolicy, PpoHyper, PpoRollout,
};
pub use qrdrl::{qrdrl_loss, FixedTaus, LossTuple, RngTaus, TauSource};
pub use train::{qrdrl_update, train_qrdrl, CurvePoint, Optimizers, TrainOutcome, UpdateLosses};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One environment step as recorded during a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    /// Quantile levels that produced `action`; kept for logging only.
    pub tau: Vec<f64>,
    pub reward: f64,
    pub value_estimate: f64,
    pub done: bool,
}

/// Transitions in time order plus the critic's value of the state that
/// follows the last one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBatch {
    pub transitions: Vec<Transition>,
    pub bootstrap_value: f64,
}

impl RolloutBatch {
    pub fn new(transitions: Vec<Transition>, bootstrap_value: f64) -> Result<Self> {
        for t in &transitions {
            if t.tau.len() != t.action.len() {
                return Err(Error::DimensionMismatch {
                    context: "transition tau vs action",
                    expected: t.action.len(),
                    actual: t.tau.len(),
                });
            }
        }
        Ok(Self {
            transitions,
            bootstrap_value,
        })
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Defaults are the published reinforcement-learning settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QrdrlHyper {
    pub gamma: f64,
    pub lambda: f64,
    /// Environment steps gathered per update.
    pub steps_per_update: usize,
    pub epochs: usize,
    pub minibatch: usize,
    /// Fresh τ draws per tuple in the loss.
    pub k: usize,
    pub beta: f64,
    pub lr: f64,
    pub lr_decay: bool,
    pub adam_eps: f64,
    pub value_coef: f64,
    /// Width of each quantile net's hidden layer.
    pub quantile_width: usize,
    /// Hidden sizes of the state feature extractor and the critic.
    pub feature_sizes: Vec<usize>,
}

impl Default for QrdrlHyper {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            steps_per_update: 2048,
            epochs: 10,
            minibatch: 32,
            k: 128,
            beta: 2.0,
            lr: 3e-4,
            lr_decay: true,
            adam_eps: 1e-5,
            value_coef: 0.5,
            quantile_width: 64,
            feature_sizes: vec![64, 64],
        }
    }
}

impl QrdrlHyper {
    pub fn validate(&self) -> Result<()> {
        let positive = self.steps_per_update > 0
            && self.epochs > 0
            && self.minibatch > 0
            && self.k > 0
            && self.lr > 0.0
            && self.adam_eps > 0.0
            && self.beta >= 0.0
            && self.quantile_width > 0
            && !self.feature_sizes.is_empty();
        if !positive {
            return Err(Error::InvalidConfig("hyperparameters must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig("gamma and lambda must lie in [0, 1]".into()));
        }
        Ok(())
    }
}
