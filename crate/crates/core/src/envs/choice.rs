use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rlcore::{Environment, StepOutcome};
use crate::rng::RunRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Button {
    A,
    B,
}

/// Episode length and button intervals (closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChoiceConfig {
    pub len: usize,
    pub button_a: (f64, f64),
    pub button_b: (f64, f64),
}

impl Default for ChoiceConfig {
    fn default() -> Self {
        Self {
            len: 8,
            button_a: (-0.6, -0.4),
            button_b: (0.4, 0.6),
        }
    }
}

impl ChoiceConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.button_a, self.button_b);
        if self.len == 0 || !(a.0 <= a.1 && a.1 < b.0 && b.0 <= b.1) {
            return Err(Error::InvalidConfig(
                "choice needs a positive length and ordered, disjoint buttons".into(),
            ));
        }
        Ok(())
    }

    pub fn button(&self, action: f64) -> Option<Button> {
        let within = |(lo, hi): (f64, f64)| (lo..=hi).contains(&action);
        if within(self.button_a) {
            Some(Button::A)
        } else if within(self.button_b) {
            Some(Button::B)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChoiceState {
    pub pressed_a: usize,
    pub pressed_b: usize,
    pub t: usize,
    pub len: usize,
}

impl ChoiceState {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            ..Self::default()
        }
    }
}

/// Pressing the button pressed less often so far (or either, on a tie) pays
/// 1; the other button pays 0; anything else pays 0 and presses nothing.
/// Returns `(reward, next, done)`.
pub fn choice_step(config: &ChoiceConfig, state: ChoiceState, action: f64) -> (f64, ChoiceState, bool) {
    let mut next = state;
    next.t += 1;
    let reward = match config.button(action) {
        Some(Button::A) => {
            next.pressed_a += 1;
            if state.pressed_a <= state.pressed_b { 1.0 } else { 0.0 }
        }
        Some(Button::B) => {
            next.pressed_b += 1;
            if state.pressed_b <= state.pressed_a { 1.0 } else { 0.0 }
        }
        None => 0.0,
    };
    (reward, next, next.t >= next.len)
}

/// The Choice game as an environment. The observation is a constant vector
/// of ones, so a feed-forward agent cannot see the counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    config: ChoiceConfig,
    state: ChoiceState,
}

pub const CHOICE_OBS_DIM: usize = 2;

impl Choice {
    pub fn new(config: ChoiceConfig) -> Result<Self> {
        config.validate()?;
        let state = ChoiceState::new(config.len);
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &ChoiceConfig {
        &self.config
    }

    pub fn state(&self) -> ChoiceState {
        self.state
    }

    pub fn observation() -> Vec<f64> {
        vec![1.0; CHOICE_OBS_DIM]
    }
}

impl Environment for Choice {
    fn observation_dim(&self) -> usize {
        CHOICE_OBS_DIM
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, _: &mut RunRng) -> Vec<f64> {
        self.state = ChoiceState::new(self.config.len);
        Self::observation()
    }

    fn step(&mut self, action: &[f64], _: &mut RunRng) -> StepOutcome {
        let (reward, next, done) = choice_step(&self.config, self.state, action[0]);
        self.state = next;
        StepOutcome {
            observation: Self::observation(),
            reward,
            done,
        }
    }
}

/// Expected episode return of a policy that presses A with probability `p_a`,
/// B with `p_b` and nothing otherwise, independently every step.
pub fn memoryless_value(p_a: f64, p_b: f64, len: usize) -> f64 {
    let p_none = 1.0 - p_a - p_b;
    // prob[a][b]: probability of having pressed A a times and B b times.
    let mut prob = vec![vec![0.0; len + 1]; len + 1];
    prob[0][0] = 1.0;
    let mut value = 0.0;
    for t in 0..len {
        let mut next = vec![vec![0.0; len + 1]; len + 1];
        for a in 0..=t {
            for b in 0..=t - a {
                let p = prob[a][b];
                if p == 0.0 {
                    continue;
                }
                if a <= b {
                    value += p * p_a;
                }
                if b <= a {
                    value += p * p_b;
                }
                next[a + 1][b] += p * p_a;
                next[a][b + 1] += p * p_b;
                next[a][b] += p * p_none;
            }
        }
        prob = next;
    }
    value
}

/// The same expectation by summing over all `3^len` press sequences.
pub fn enumerate_memoryless_value(p_a: f64, p_b: f64, len: usize) -> f64 {
    let config = ChoiceConfig {
        len,
        ..ChoiceConfig::default()
    };
    let probs = [p_a, p_b, 1.0 - p_a - p_b];
    let actions = [-0.5, 0.5, 0.0];
    let mut total = 0.0;
    for code in 0..3usize.pow(len as u32) {
        let mut c = code;
        let mut state = ChoiceState::new(len);
        let (mut p, mut ret) = (1.0, 0.0);
        for _ in 0..len {
            let k = c % 3;
            c /= 3;
            p *= probs[k];
            let (r, next, _) = choice_step(&config, state, actions[k]);
            ret += r;
            state = next;
        }
        total += p * ret;
    }
    total
}

/// Best memoryless value over a `steps × steps` grid of `(p_a, p_b)` with
/// `p_a + p_b ≤ 1`, as `(value, p_a, p_b)`.
pub fn optimal_memoryless_value(len: usize, steps: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        for j in 0..=steps - i {
            let (pa, pb) = (i as f64 / steps as f64, j as f64 / steps as f64);
            let v = memoryless_value(pa, pb, len);
            if v > best.0 {
                best = (v, pa, pb);
            }
        }
    }
    best
}
