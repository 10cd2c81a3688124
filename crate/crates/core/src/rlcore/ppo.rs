use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::critic::ValueCritic;
use super::env::Environment;
use super::gae::{gae, AdvantageEstimates};
use super::gaussian::gaussian_log_prob;
use super::train::{critic_step, lr_at, minibatches, update_count, Optimizers, Rollout, UpdateLosses};
use super::train::{CurvePoint, TrainOutcome};
use super::{QrdrlHyper, RolloutBatch};
use crate::diffcore::{Activation, Dense, Linear, Parameter, Parameterized};
use crate::error::{Error, Result};
use crate::rng::{RunRng, SeedStream};

/// Diagonal Gaussian with a state-dependent mean (tanh feature extractor and
/// a linear head) and a state-independent log-std.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMlpPolicy {
    extractor: Dense,
    mean_head: Linear,
    log_std: Parameter,
}

impl GaussianMlpPolicy {
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        feature_sizes: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if action_dim == 0 || feature_sizes.is_empty() {
            return Err(Error::InvalidConfig("policy needs actions and a feature layer".into()));
        }
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(feature_sizes);
        let extractor = Dense::init(&sizes, Activation::Tanh, Activation::Tanh, rng)?;
        let last = *feature_sizes.last().expect("non-empty");
        let mean_head = Linear::scaled_init(last, action_dim, true, 0.01 / (last as f64).sqrt(), rng);
        Ok(Self {
            extractor,
            mean_head,
            log_std: Parameter::zeros(action_dim, 1, crate::diffcore::Constraint::Unconstrained),
        })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[f64] {
        self.log_std.value()
    }

    pub fn mean(&self, state: &[f64]) -> Result<Vec<f64>> {
        let phi = self.extractor.forward(state)?;
        let mut out = vec![0.0; self.action_dim()];
        self.mean_head.apply(self.mean_head.weight.value(), &phi, &mut out);
        Ok(out)
    }

    /// Samples `a = μ + σ ε`. Returns the action, `Φ(ε)` per dimension (the
    /// quantile level of the draw, for logging) and `log π(a)`.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let mean = self.mean(state)?;
        let unit = Normal::standard();
        let mut action = Vec::with_capacity(mean.len());
        let mut taus = Vec::with_capacity(mean.len());
        let mut logp = 0.0;
        for (&m, &ls) in mean.iter().zip(self.log_std.value()) {
            let eps: f64 = StandardNormal.sample(rng);
            let a = m + ls.exp() * eps;
            logp += gaussian_log_prob(a, m, ls);
            action.push(a);
            taus.push(unit.cdf(eps));
        }
        Ok((action, taus, logp))
    }

    pub fn sample_actions<R: Rng + ?Sized>(&self, state: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        (0..n).map(|_| Ok(self.act(state, rng)?.0)).collect()
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let mean = self.mean(state)?;
        check_len(action, mean.len())?;
        Ok(mean
            .iter()
            .zip(self.log_std.value())
            .zip(action)
            .map(|((&m, &ls), &a)| gaussian_log_prob(a, m, ls))
            .sum())
    }

    /// Computes `log π(a|s)`, asks `weight` for `∂L/∂ log π` given it, and
    /// accumulates the resulting parameter gradient. Returns `log π`.
    pub(crate) fn backprop_log_prob(
        &mut self,
        state: &[f64],
        action: &[f64],
        weight: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        let cache = self.extractor.forward_cached(state)?;
        let phi = cache.output();
        let d = self.action_dim();
        check_len(action, d)?;
        let mut mean = vec![0.0; d];
        self.mean_head.apply(self.mean_head.weight.value(), phi, &mut mean);
        let log_std = self.log_std.value().to_vec();
        let logp: f64 = (0..d).map(|j| gaussian_log_prob(action[j], mean[j], log_std[j])).sum();
        let w = weight(logp);
        if w == 0.0 {
            return Ok(logp);
        }
        let mut d_mean = vec![0.0; d];
        for j in 0..d {
            let inv_var = (-2.0 * log_std[j]).exp();
            let diff = action[j] - mean[j];
            d_mean[j] = w * diff * inv_var;
            self.log_std.grad_mut()[j] += w * (diff * diff * inv_var - 1.0);
        }
        let mut d_phi = vec![0.0; phi.len()];
        let head_w = self.mean_head.weight.value().to_vec();
        self.mean_head.accumulate(&head_w, phi, &d_mean, Some(&mut d_phi));
        self.extractor.backward(&cache, &d_phi)?;
        Ok(logp)
    }
}

fn check_len(action: &[f64], d: usize) -> Result<()> {
    if action.len() != d {
        return Err(Error::DimensionMismatch {
            context: "gaussian action",
            expected: d,
            actual: action.len(),
        });
    }
    Ok(())
}

impl Parameterized for GaussianMlpPolicy {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut v = self.extractor.parameters();
        v.extend(self.mean_head.parameters());
        v.push(&self.log_std);
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = self.extractor.parameters_mut();
        v.extend(self.mean_head.parameters_mut());
        v.push(&mut self.log_std);
        v
    }
}

/// The quantile agent's schedule plus the surrogate clip range. `k` and
/// `beta` in the schedule are unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoHyper {
    #[serde(flatten)]
    pub schedule: QrdrlHyper,
    pub clip: f64,
}

impl Default for PpoHyper {
    fn default() -> Self {
        Self {
            schedule: QrdrlHyper::default(),
            clip: 0.2,
        }
    }
}

impl PpoHyper {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::InvalidConfig("clip ratio must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A rollout plus the behaviour policy's log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoRollout {
    pub batch: RolloutBatch,
    pub log_probs: Vec<f64>,
}

/// `min(ratio · A, clip(ratio, 1 − ε, 1 + ε) · A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * advantage).min(clipped * advantage)
}

/// Epochs of shuffled minibatches on the clipped surrogate and the critic
/// loss.
#[allow(clippy::too_many_arguments)]
pub fn ppo_baseline_update(
    policy: &mut GaussianMlpPolicy,
    critic: &mut ValueCritic,
    optim: &mut Optimizers,
    rollout: &PpoRollout,
    est: &AdvantageEstimates,
    hyper: &PpoHyper,
    lr: f64,
    shuffle_rng: &mut RunRng,
) -> Result<UpdateLosses> {
    let batch = &rollout.batch;
    let h = &hyper.schedule;
    let mut sums = UpdateLosses::default();
    let mut count = 0usize;
    for _ in 0..h.epochs {
        for chunk in minibatches(batch.len(), h.minibatch, shuffle_rng) {
            policy.zero_grads();
            let n = chunk.len() as f64;
            let mut loss = 0.0;
            for &i in &chunk {
                let t = &batch.transitions[i];
                let adv = est.advantages[i];
                let old = rollout.log_probs[i];
                policy.backprop_log_prob(&t.state, &t.action, |logp| {
                    let ratio = (logp - old).exp();
                    let surrogate = clipped_surrogate(ratio, adv, hyper.clip);
                    loss -= surrogate / n;
                    if ratio * adv <= surrogate {
                        -ratio * adv / n
                    } else {
                        0.0
                    }
                })?;
            }
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { update: optim.policy.steps() as usize });
            }
            optim.policy.step(policy, lr)?;
            let value = critic_step(critic, &mut optim.critic, batch, est, &chunk, h.value_coef, lr)?;
            sums.policy += loss;
            sums.value += value;
            count += 1;
        }
    }
    Ok(UpdateLosses {
        policy: sums.policy / count as f64,
        value: sums.value / count as f64,
    })
}

/// PPO with a Gaussian policy on the same schedule and critic as
/// [`super::train_qrdrl`].
pub fn train_ppo<E: Environment>(
    env: E,
    hyper: &PpoHyper,
    total_steps: usize,
    seed: u64,
) -> Result<TrainOutcome<GaussianMlpPolicy>> {
    hyper.validate()?;
    let h = &hyper.schedule;
    let seeds = SeedStream::new(seed);
    let (obs_dim, action_dim) = (env.observation_dim(), env.action_dim());
    let mut policy = GaussianMlpPolicy::init(obs_dim, action_dim, &h.feature_sizes, &mut seeds.substream("policy/init"))?;
    let mut critic = ValueCritic::init(obs_dim, &h.feature_sizes, &mut seeds.substream("critic/init"))?;
    let mut optim = Optimizers::new(&policy, &critic, h.lr, h.adam_eps);
    let mut act_rng = seeds.substream("rollout/noise");
    let mut env_rng = seeds.substream("env");
    let mut shuffle_rng = seeds.substream("minibatch/shuffle");
    let mut rollout = Rollout::new(env, &mut env_rng);

    let updates = update_count(total_steps, h.steps_per_update);
    let mut curve = Vec::with_capacity(updates);
    let mut aborted = None;
    for update in 0..updates {
        let (batch, log_probs) = rollout.collect(h.steps_per_update, &critic, &mut env_rng, |obs| {
            policy.act(obs, &mut act_rng)
        })?;
        let mean_return = rollout.window_mean();
        let est = gae(&batch, h.gamma, h.lambda)?;
        let lr = lr_at(h, update, updates);
        let data = PpoRollout { batch, log_probs };
        match ppo_baseline_update(&mut policy, &mut critic, &mut optim, &data, &est, hyper, lr, &mut shuffle_rng) {
            Ok(losses) => curve.push(CurvePoint {
                update_index: update,
                env_steps: rollout.steps,
                mean_return,
                policy_loss: losses.policy,
                value_loss: losses.value,
            }),
            Err(e @ (Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. })) => {
                aborted = Some(format!("update {update}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TrainOutcome {
        curve,
        policy,
        critic,
        aborted,
    })
}
