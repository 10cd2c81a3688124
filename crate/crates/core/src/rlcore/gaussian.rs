use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diffcore::{Activation, AdamState, Dense, DenseCache, Parameter, Parameterized};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// `log N(a; μ, exp(log_std))`.
pub fn gaussian_log_prob(action: f64, mean: f64, log_std: f64) -> f64 {
    let z = (action - mean) * (-log_std).exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

/// A state-conditioned diagonal Gaussian: `state → hidden (relu) → [μ, log σ]`
/// per action dimension. Log-std is clamped; the clamp passes no gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    net: Dense,
    action_dim: usize,
}

/// One played game or step: where the policy acted, what it did, how it went.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
}

impl GaussianPolicy {
    pub fn init<R: Rng + ?Sized>(
        state_dim: usize,
        hidden: usize,
        action_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if action_dim == 0 {
            return Err(Error::InvalidConfig("gaussian policy needs an action".into()));
        }
        let net = Dense::init(
            &[state_dim, hidden, 2 * action_dim],
            Activation::Relu,
            Activation::Identity,
            rng,
        )?;
        Ok(Self { net, action_dim })
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn net(&self) -> &Dense {
        &self.net
    }

    /// `(means, clamped log-stds)` in a state.
    pub fn distribution(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = self.net.forward(state)?;
        Ok(split_head(&out, self.action_dim))
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let (mean, log_std) = self.distribution(state)?;
        Ok(mean
            .iter()
            .zip(&log_std)
            .map(|(&m, &ls)| {
                let eps: f64 = StandardNormal.sample(rng);
                m + ls.exp() * eps
            })
            .collect())
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let (mean, log_std) = self.distribution(state)?;
        check_action(action, self.action_dim)?;
        Ok((0..self.action_dim)
            .map(|j| gaussian_log_prob(action[j], mean[j], log_std[j]))
            .sum())
    }

    /// Adds `weight · ∇ log π(action | state)` to the gradients and returns
    /// the log-probability.
    fn accumulate_log_prob_grad(&mut self, state: &[f64], action: &[f64], weight: f64) -> Result<f64> {
        check_action(action, self.action_dim)?;
        let cache: DenseCache = self.net.forward_cached(state)?;
        let raw = cache.output().to_vec();
        let d = self.action_dim;
        let mut upstream = vec![0.0; 2 * d];
        let mut logp = 0.0;
        for j in 0..d {
            let mean = raw[j];
            let log_std = raw[d + j].clamp(LOG_STD_MIN, LOG_STD_MAX);
            let inv_var = (-2.0 * log_std).exp();
            let diff = action[j] - mean;
            logp += gaussian_log_prob(action[j], mean, log_std);
            upstream[j] = weight * diff * inv_var;
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw[d + j]) {
                upstream[d + j] = weight * (diff * diff * inv_var - 1.0);
            }
        }
        self.net.backward(&cache, &upstream)?;
        Ok(logp)
    }
}

fn split_head(out: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mean = out[..d].to_vec();
    let log_std = out[d..]
        .iter()
        .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
        .collect();
    (mean, log_std)
}

fn check_action(action: &[f64], d: usize) -> Result<()> {
    if action.len() != d {
        return Err(Error::DimensionMismatch {
            context: "gaussian action",
            expected: d,
            actual: action.len(),
        });
    }
    Ok(())
}

impl Parameterized for GaussianPolicy {
    fn parameters(&self) -> Vec<&Parameter> {
        self.net.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.net.parameters_mut()
    }
}

/// One REINFORCE step ascending `mean_i r_i · log π(a_i | s_i)`. Returns that
/// objective evaluated before the step.
pub fn gaussian_pg_update(
    policy: &mut GaussianPolicy,
    adam: &mut AdamState,
    samples: &[GaussianSample],
    lr: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    policy.zero_grads();
    let n = samples.len() as f64;
    let mut objective = 0.0;
    for s in samples {
        // Descent on the negated objective.
        let logp = policy.accumulate_log_prob_grad(&s.state, &s.action, -s.reward / n)?;
        objective += s.reward * logp / n;
    }
    adam.step(policy, lr)?;
    Ok(objective)
}

#[cfg(test)]
pub(crate) fn log_prob_grad(policy: &mut GaussianPolicy, state: &[f64], action: &[f64]) -> Vec<f64> {
    policy.zero_grads();
    policy
        .accumulate_log_prob_grad(state, action, 1.0)
        .expect("valid shapes");
    policy.flat_grads()
}
