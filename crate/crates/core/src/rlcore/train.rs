use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::critic::{critic_loss, ValueCritic};
use super::env::Environment;
use super::gae::{gae, AdvantageEstimates};
use super::policy::QuantilePolicy;
use super::qrdrl::{qrdrl_loss, LossTuple, RngTaus};
use super::{QrdrlHyper, RolloutBatch, Transition};
use crate::diffcore::{linear_decay, AdamConfig, AdamState, Parameterized};
use crate::error::{Error, Result};
use crate::rng::{RunRng, SeedStream};

/// One row of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update_index: usize,
    pub env_steps: usize,
    /// Mean return of the episodes that finished during this update's
    /// rollout; the previous value when none did.
    pub mean_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<P> {
    pub curve: Vec<CurvePoint>,
    pub policy: P,
    pub critic: ValueCritic,
    /// Why training stopped early, if it did. `policy` and `critic` hold the
    /// last finite parameters.
    pub aborted: Option<String>,
}

/// Separate Adam states for the policy and the critic.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub policy: AdamState,
    pub critic: AdamState,
}

impl Optimizers {
    pub fn new<P: Parameterized>(policy: &P, critic: &ValueCritic, lr: f64, eps: f64) -> Self {
        let config = AdamConfig {
            eps,
            ..AdamConfig::with_lr(lr)
        };
        Self {
            policy: AdamState::new(config, policy),
            critic: AdamState::new(config, critic),
        }
    }
}

/// Mean minibatch losses of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateLosses {
    pub policy: f64,
    pub value: f64,
}

/// Steps an environment across updates, tracking episode returns.
pub(crate) struct Rollout<E> {
    env: E,
    obs: Vec<f64>,
    running: f64,
    finished: Vec<f64>,
    last_mean: f64,
    pub(crate) steps: usize,
}

/// What a policy returns for one step: action, the quantile levels or noise
/// percentiles behind it, and an extra per-step scalar (log-probability for
/// PPO).
pub(crate) type Act = (Vec<f64>, Vec<f64>, f64);

impl<E: Environment> Rollout<E> {
    pub(crate) fn new(mut env: E, rng: &mut RunRng) -> Self {
        let obs = env.reset(rng);
        Self {
            env,
            obs,
            running: 0.0,
            finished: Vec::new(),
            last_mean: 0.0,
            steps: 0,
        }
    }

    pub(crate) fn collect<F>(
        &mut self,
        n: usize,
        critic: &ValueCritic,
        env_rng: &mut RunRng,
        mut act: F,
    ) -> Result<(RolloutBatch, Vec<f64>)>
    where
        F: FnMut(&[f64]) -> Result<Act>,
    {
        let mut transitions = Vec::with_capacity(n);
        let mut extras = Vec::with_capacity(n);
        for _ in 0..n {
            let (action, tau, extra) = act(&self.obs)?;
            let value = critic.value(&self.obs)?;
            let out = self.env.step(&action, env_rng);
            self.running += out.reward;
            let state = std::mem::replace(&mut self.obs, out.observation);
            if out.done {
                self.finished.push(self.running);
                self.running = 0.0;
                self.obs = self.env.reset(env_rng);
            }
            transitions.push(Transition {
                state,
                action,
                tau,
                reward: out.reward,
                value_estimate: value,
                done: out.done,
            });
            extras.push(extra);
        }
        self.steps += n;
        let bootstrap = critic.value(&self.obs)?;
        Ok((RolloutBatch::new(transitions, bootstrap)?, extras))
    }

    /// Mean return over episodes finished since the last call.
    pub(crate) fn window_mean(&mut self) -> f64 {
        if !self.finished.is_empty() {
            self.last_mean = crate::stats::mean(&self.finished);
            self.finished.clear();
        }
        self.last_mean
    }
}

/// Shuffled minibatch index chunks for one epoch; the last may be short.
pub(crate) fn minibatches(n: usize, size: usize, rng: &mut RunRng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(size).map(<[usize]>::to_vec).collect()
}

/// Critic regression step on one minibatch. Returns the MSE.
pub(crate) fn critic_step(
    critic: &mut ValueCritic,
    adam: &mut AdamState,
    batch: &RolloutBatch,
    est: &AdvantageEstimates,
    chunk: &[usize],
    coef: f64,
    lr: f64,
) -> Result<f64> {
    critic.zero_grads();
    let states: Vec<&[f64]> = chunk.iter().map(|&i| batch.transitions[i].state.as_slice()).collect();
    let targets: Vec<f64> = chunk.iter().map(|&i| est.returns[i]).collect();
    let loss = critic_loss(critic, &states, &targets, Some(coef))?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { update: adam.steps() as usize });
    }
    adam.step(critic, lr)?;
    Ok(loss)
}

/// Epochs of shuffled minibatches minimizing the weighted quantile loss and
/// the critic loss on one rollout.
#[allow(clippy::too_many_arguments)]
pub fn qrdrl_update(
    policy: &mut QuantilePolicy,
    critic: &mut ValueCritic,
    optim: &mut Optimizers,
    batch: &RolloutBatch,
    est: &AdvantageEstimates,
    hyper: &QrdrlHyper,
    lr: f64,
    shuffle_rng: &mut RunRng,
    tau_rng: &mut RunRng,
) -> Result<UpdateLosses> {
    let mut sums = UpdateLosses::default();
    let mut count = 0usize;
    for _ in 0..hyper.epochs {
        for chunk in minibatches(batch.len(), hyper.minibatch, shuffle_rng) {
            let tuples: Vec<LossTuple<'_>> = chunk
                .iter()
                .map(|&i| LossTuple {
                    state: &batch.transitions[i].state,
                    action: &batch.transitions[i].action,
                    advantage: est.advantages[i],
                })
                .collect();
            policy.zero_grads();
            let loss = qrdrl_loss(policy, &tuples, hyper.k, hyper.beta, &mut RngTaus(tau_rng), true)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { update: optim.policy.steps() as usize });
            }
            optim.policy.step(policy, lr)?;
            let value = critic_step(critic, &mut optim.critic, batch, est, &chunk, hyper.value_coef, lr)?;
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

pub(crate) fn update_count(total_steps: usize, per_update: usize) -> usize {
    total_steps.div_ceil(per_update).max(1)
}

pub(crate) fn lr_at(hyper: &QrdrlHyper, update: usize, updates: usize) -> f64 {
    if hyper.lr_decay {
        linear_decay(hyper.lr, update as f64 / updates as f64)
    } else {
        hyper.lr
    }
}

/// Trains a quantile policy with a value critic for `total_steps`
/// environment steps (rounded up to whole rollouts).
pub fn train_qrdrl<E: Environment>(
    env: E,
    hyper: &QrdrlHyper,
    total_steps: usize,
    seed: u64,
) -> Result<TrainOutcome<QuantilePolicy>> {
    hyper.validate()?;
    let seeds = SeedStream::new(seed);
    let (obs_dim, action_dim) = (env.observation_dim(), env.action_dim());
    let mut policy = QuantilePolicy::init(
        obs_dim,
        action_dim,
        hyper.quantile_width,
        &hyper.feature_sizes,
        &mut seeds.substream("policy/init"),
    )?;
    let mut critic = ValueCritic::init(obs_dim, &hyper.feature_sizes, &mut seeds.substream("critic/init"))?;
    let mut optim = Optimizers::new(&policy, &critic, hyper.lr, hyper.adam_eps);
    let mut act_rng = seeds.substream("rollout/taus");
    let mut env_rng = seeds.substream("env");
    let mut shuffle_rng = seeds.substream("minibatch/shuffle");
    let mut tau_rng = seeds.substream("loss/taus");
    let mut rollout = Rollout::new(env, &mut env_rng);

    let updates = update_count(total_steps, hyper.steps_per_update);
    let mut curve = Vec::with_capacity(updates);
    let mut aborted = None;
    for update in 0..updates {
        let (batch, _) = rollout.collect(hyper.steps_per_update, &critic, &mut env_rng, |obs| {
            let (a, t) = policy.act(obs, &mut act_rng)?;
            Ok((a, t, 0.0))
        })?;
        let mean_return = rollout.window_mean();
        let est = gae(&batch, hyper.gamma, hyper.lambda)?;
        let lr = lr_at(hyper, update, updates);
        let step = qrdrl_update(
            &mut policy,
            &mut critic,
            &mut optim,
            &batch,
            &est,
            hyper,
            lr,
            &mut shuffle_rng,
            &mut tau_rng,
        );
        match step {
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
