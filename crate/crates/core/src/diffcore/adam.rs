//! Adam with bias correction and a linearly decaying learning rate.

use serde::{Deserialize, Serialize};

use super::param::{Parameter, Parameterized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-5,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// First and second moment estimates, one buffer per parameter in the
/// owner's [`Parameterized`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new<P: Parameterized + ?Sized>(config: AdamConfig, model: &P) -> Self {
        let shapes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
        Self {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update of every parameter of `model` with learning rate `lr_now`.
    /// Gradients are left in place.
    pub fn step<P: Parameterized + ?Sized>(&mut self, model: &mut P, lr_now: f64) -> Result<()> {
        let mut params = model.parameters_mut();
        self.step_params(&mut params, lr_now)
    }

    pub fn step_params(&mut self, params: &mut [&mut Parameter], lr_now: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                context: "adam parameter count",
                expected: self.m.len(),
                actual: params.len(),
            });
        }
        for (index, p) in params.iter().enumerate() {
            if p.len() != self.m[index].len() {
                return Err(Error::DimensionMismatch {
                    context: "adam parameter shape",
                    expected: self.m[index].len(),
                    actual: p.len(),
                });
            }
            if p.grad().iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { index });
            }
        }
        self.t += 1;
        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let (value, grad) = p.value_and_grad_mut();
            for i in 0..value.len() {
                let g = grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                value[i] -= lr_now * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Learning rate after a fraction `progress ∈ [0, 1]` of all updates.
pub fn linear_decay(base: f64, progress: f64) -> f64 {
    base * (1.0 - progress.clamp(0.0, 1.0))
}
