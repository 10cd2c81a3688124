use crate::rng::RunRng;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Episodic environment with a continuous action vector. After `done`, the
/// caller resets before stepping again.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, rng: &mut RunRng) -> Vec<f64>;
    fn step(&mut self, action: &[f64], rng: &mut RunRng) -> StepOutcome;
}
