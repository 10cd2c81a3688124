use rand::Rng;

use crate::diffcore::{Activation, Dense, Parameter, Parameterized};
use crate::error::{Error, Result};

/// Unconstrained `obs → hidden (tanh) → 1` value network.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCritic {
    net: Dense,
}

impl ValueCritic {
    pub fn init<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Self {
            net: Dense::init(&sizes, Activation::Tanh, Activation::Identity, rng)?,
        })
    }

    pub fn from_dense(net: Dense) -> Result<Self> {
        if net.out_dim() != 1 {
            return Err(Error::DimensionMismatch {
                context: "critic output",
                expected: 1,
                actual: net.out_dim(),
            });
        }
        Ok(Self { net })
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.net.forward(state)?[0])
    }
}

impl Parameterized for ValueCritic {
    fn parameters(&self) -> Vec<&Parameter> {
        self.net.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.net.parameters_mut()
    }
}

/// Mean squared error `mean (V(s) − R)²`. When `coef` is given, the gradient
/// of `coef · MSE` is accumulated into the critic.
pub fn critic_loss(
    critic: &mut ValueCritic,
    states: &[&[f64]],
    returns: &[f64],
    coef: Option<f64>,
) -> Result<f64> {
    if states.len() != returns.len() {
        return Err(Error::DimensionMismatch {
            context: "critic targets",
            expected: states.len(),
            actual: returns.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = states.len() as f64;
    let mut total = 0.0;
    for (s, &r) in states.iter().zip(returns) {
        let cache = critic.net.forward_cached(s)?;
        let err = cache.output()[0] - r;
        total += err * err;
        if let Some(c) = coef {
            critic.net.backward(&cache, &[c * 2.0 * err / n])?;
        }
    }
    Ok(total / n)
}
