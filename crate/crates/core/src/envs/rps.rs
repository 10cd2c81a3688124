use serde::{Deserialize, Serialize};

use crate::diffcore::{AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::rlcore::{gaussian_pg_update, qrdrl_loss, GaussianPolicy, GaussianSample, LossTuple, QuantilePolicy, RngTaus};
use crate::rng::{RunRng, SeedStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RpsMove {
    Rock,
    Paper,
    Scissors,
    Invalid,
}

impl RpsMove {
    /// Whether `self` beats `other` among valid moves.
    fn beats(self, other: RpsMove) -> bool {
        matches!(
            (self, other),
            (RpsMove::Rock, RpsMove::Scissors) | (RpsMove::Paper, RpsMove::Rock) | (RpsMove::Scissors, RpsMove::Paper)
        )
    }
}

/// Closed intervals of the real line that count as Rock, Paper and
/// Scissors. Everything else is invalid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpsActionSpace {
    pub rock: (f64, f64),
    pub paper: (f64, f64),
    pub scissors: (f64, f64),
}

impl Default for RpsActionSpace {
    fn default() -> Self {
        Self {
            rock: (-1.25, -0.75),
            paper: (-0.25, 0.25),
            scissors: (0.75, 1.25),
        }
    }
}

impl RpsActionSpace {
    pub fn validate(&self) -> Result<()> {
        let mut ivs = self.intervals().map(|(_, lo, hi)| (lo, hi));
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ordered = ivs.iter().all(|(lo, hi)| lo <= hi) && ivs.windows(2).all(|w| w[0].1 < w[1].0);
        if !ordered {
            return Err(Error::InvalidConfig("RPS intervals must be disjoint".into()));
        }
        Ok(())
    }

    pub fn intervals(&self) -> [(RpsMove, f64, f64); 3] {
        [
            (RpsMove::Rock, self.rock.0, self.rock.1),
            (RpsMove::Paper, self.paper.0, self.paper.1),
            (RpsMove::Scissors, self.scissors.0, self.scissors.1),
        ]
    }

    pub fn classify(&self, action: f64) -> RpsMove {
        self.intervals()
            .into_iter()
            .find(|&(_, lo, hi)| (lo..=hi).contains(&action))
            .map_or(RpsMove::Invalid, |(m, _, _)| m)
    }

    /// Zero-sum payoffs `(r1, r2)` for simultaneous actions.
    pub fn judge(&self, a1: f64, a2: f64) -> (f64, f64) {
        let r1 = match (self.classify(a1), self.classify(a2)) {
            (RpsMove::Invalid, RpsMove::Invalid) => 0.0,
            (RpsMove::Invalid, _) => -1.0,
            (_, RpsMove::Invalid) => 1.0,
            (m1, m2) if m1.beats(m2) => 1.0,
            (m1, m2) if m2.beats(m1) => -1.0,
            _ => 0.0,
        };
        (r1, -r1)
    }
}

/// [`RpsActionSpace::judge`] on the default intervals.
pub fn rps_judge(a1: f64, a2: f64) -> (f64, f64) {
    RpsActionSpace::default().judge(a1, a2)
}

/// Bound on the previous-game actions fed back as state. Anything past the
/// outer intervals is just invalid, and unbounded feedback of a policy's own
/// action into its input can grow geometrically.
pub const STATE_CLIP: f64 = 2.0;

fn clip_state(a: f64) -> f64 {
    a.clamp(-STATE_CLIP, STATE_CLIP)
}

/// One game from the trainee's side. `state` is the trainee's input for it:
/// its own and the opponent's action in the previous game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpsGame {
    pub state: [f64; 2],
    pub action: f64,
    pub opponent: f64,
    pub reward: f64,
}

/// A policy trained against the countering opponent.
pub trait RpsPlayer {
    fn act(&self, state: [f64; 2], rng: &mut RunRng) -> Result<f64>;
    /// One training phase on the evaluation games of an iteration. Returns
    /// the mean training loss.
    fn learn(&mut self, games: &[RpsGame], rng: &mut RunRng) -> Result<f64>;
}

/// How each iteration's Gaussian counter is trained and evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CounterConfig {
    pub games: usize,
    /// Games per policy-gradient step.
    pub batch: usize,
    pub lr: f64,
    pub hidden: usize,
    pub eval_games: usize,
    /// Subtract the batch's mean reward before each step.
    pub baseline: bool,
}

impl Default for CounterConfig {
    fn default() -> Self {
        Self {
            games: 10_000,
            batch: 20,
            lr: 2e-3,
            hidden: 64,
            eval_games: 100,
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpsIteration {
    /// The evaluation games, trainee's perspective.
    pub games: Vec<RpsGame>,
    /// The counter's mean reward over its last training batch.
    pub counter_final_reward: f64,
}

impl RpsIteration {
    pub fn mean_return(&self) -> f64 {
        crate::stats::mean(&self.games.iter().map(|g| g.reward).collect::<Vec<_>>())
    }
}

/// Trains a fresh Gaussian counter against the frozen `trainee`, then plays
/// `eval_games` between them. All randomness comes from `seeds`.
pub fn rps_iteration(
    space: &RpsActionSpace,
    trainee: &dyn RpsPlayer,
    counter_cfg: &CounterConfig,
    seeds: &SeedStream,
) -> Result<RpsIteration> {
    if counter_cfg.batch == 0 || counter_cfg.eval_games == 0 {
        return Err(Error::InvalidConfig("counter batch and evaluation games must be positive".into()));
    }
    let mut counter = GaussianPolicy::init(2, counter_cfg.hidden, 1, &mut seeds.substream("counter/init"))?;
    let mut adam = AdamState::new(AdamConfig::with_lr(counter_cfg.lr), &counter);
    let mut counter_rng = seeds.substream("counter/noise");
    let mut trainee_rng = seeds.substream("trainee/noise");

    let mut last = (0.0, 0.0);
    let mut batch = Vec::with_capacity(counter_cfg.batch);
    let mut counter_final_reward = 0.0;
    for _ in 0..counter_cfg.games {
        let state = vec![last.0, last.1];
        let c = counter.sample(&state, &mut counter_rng)?[0];
        let t = trainee.act([last.1, last.0], &mut trainee_rng)?;
        let (r_counter, _) = space.judge(c, t);
        batch.push(GaussianSample {
            state,
            action: vec![c],
            reward: r_counter,
        });
        if batch.len() == counter_cfg.batch {
            counter_final_reward = batch.iter().map(|g| g.reward).sum::<f64>() / batch.len() as f64;
            if counter_cfg.baseline {
                subtract_mean_reward(&mut batch);
            }
            gaussian_pg_update(&mut counter, &mut adam, &batch, counter_cfg.lr)?;
            batch.clear();
        }
        last = (clip_state(c), clip_state(t));
    }

    let mut last = (0.0, 0.0);
    let mut games = Vec::with_capacity(counter_cfg.eval_games);
    for _ in 0..counter_cfg.eval_games {
        let c = counter.sample(&[last.0, last.1], &mut counter_rng)?[0];
        let state = [last.1, last.0];
        let t = trainee.act(state, &mut trainee_rng)?;
        let (reward, _) = space.judge(t, c);
        games.push(RpsGame {
            state,
            action: t,
            opponent: c,
            reward,
        });
        last = (clip_state(c), clip_state(t));
    }
    Ok(RpsIteration {
        games,
        counter_final_reward,
    })
}

/// Trainee optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraineeConfig {
    pub lr: f64,
    /// Gradient steps on each iteration's games.
    pub steps: usize,
    /// Mean-reward baseline for the Gaussian trainee; the quantile trainee
    /// always weights by the raw reward.
    pub baseline: bool,
}

impl Default for TraineeConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            steps: 10,
            baseline: true,
        }
    }
}

fn subtract_mean_reward(samples: &mut [GaussianSample]) {
    let mean = samples.iter().map(|g| g.reward).sum::<f64>() / samples.len().max(1) as f64;
    for g in samples {
        g.reward -= mean;
    }
}

/// Stateless quantile policy trained on `r · ρ_τ(a − Ĝ(τ))` with one fresh
/// level per game.
#[derive(Debug, Clone)]
pub struct QuantilePlayer {
    pub policy: QuantilePolicy,
    adam: AdamState,
    config: TraineeConfig,
}

impl QuantilePlayer {
    pub fn new(width: usize, config: TraineeConfig, rng: &mut RunRng) -> Result<Self> {
        let policy = QuantilePolicy::stateless(width, rng)?;
        let adam = AdamState::new(AdamConfig::with_lr(config.lr), &policy);
        Ok(Self { policy, adam, config })
    }
}

impl RpsPlayer for QuantilePlayer {
    fn act(&self, _: [f64; 2], rng: &mut RunRng) -> Result<f64> {
        Ok(self.policy.act(&[], rng)?.0[0])
    }

    fn learn(&mut self, games: &[RpsGame], rng: &mut RunRng) -> Result<f64> {
        let actions: Vec<[f64; 1]> = games.iter().map(|g| [g.action]).collect();
        let tuples: Vec<LossTuple<'_>> = games
            .iter()
            .zip(&actions)
            .map(|(g, a)| LossTuple {
                state: &[],
                action: a,
                advantage: g.reward,
            })
            .collect();
        let mut total = 0.0;
        for _ in 0..self.config.steps {
            self.policy.clear_grads();
            total += qrdrl_loss(&mut self.policy, &tuples, 1, 0.0, &mut RngTaus(rng), true)?;
            self.adam.step(&mut self.policy, self.config.lr)?;
        }
        Ok(total / self.config.steps.max(1) as f64)
    }
}

/// Gaussian policy on the previous game's actions, trained by REINFORCE.
#[derive(Debug, Clone)]
pub struct GaussianPlayer {
    pub policy: GaussianPolicy,
    adam: AdamState,
    config: TraineeConfig,
}

impl GaussianPlayer {
    pub fn new(hidden: usize, config: TraineeConfig, rng: &mut RunRng) -> Result<Self> {
        let policy = GaussianPolicy::init(2, hidden, 1, rng)?;
        let adam = AdamState::new(AdamConfig::with_lr(config.lr), &policy);
        Ok(Self { policy, adam, config })
    }
}

impl RpsPlayer for GaussianPlayer {
    fn act(&self, state: [f64; 2], rng: &mut RunRng) -> Result<f64> {
        Ok(self.policy.sample(&state, rng)?[0])
    }

    fn learn(&mut self, games: &[RpsGame], _: &mut RunRng) -> Result<f64> {
        let mut samples: Vec<GaussianSample> = games
            .iter()
            .map(|g| GaussianSample {
                state: g.state.to_vec(),
                action: vec![g.action],
                reward: g.reward,
            })
            .collect();
        if self.config.baseline {
            subtract_mean_reward(&mut samples);
        }
        let mut total = 0.0;
        for _ in 0..self.config.steps {
            total -= gaussian_pg_update(&mut self.policy, &mut self.adam, &samples, self.config.lr)?;
        }
        Ok(total / self.config.steps.max(1) as f64)
    }
}

/// Runs `iterations` rounds of counter training, evaluation and a trainee
/// update. Returns the trainee's mean evaluation return per iteration.
pub fn train_rps(
    player: &mut dyn RpsPlayer,
    space: &RpsActionSpace,
    counter: &CounterConfig,
    iterations: usize,
    seeds: &SeedStream,
) -> Result<Vec<f64>> {
    space.validate()?;
    let mut learn_rng = seeds.substream("trainee/learn");
    let mut returns = Vec::with_capacity(iterations);
    for i in 0..iterations {
        let it = rps_iteration(space, &*player, counter, &seeds.child(&format!("iteration/{i}")))?;
        returns.push(it.mean_return());
        player.learn(&it.games, &mut learn_rng)?;
    }
    Ok(returns)
}
