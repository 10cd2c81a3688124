use crate::error::{Error, Result};
use crate::mononet::MonotonicQuantileNet;

use super::loss::quantile_loss;

/// Anything that maps a quantile level in `[0, 1]` to a value.
pub trait QuantileFunction {
    fn quantile(&self, tau: f64) -> f64;

    fn quantiles(&self, taus: &[f64]) -> Vec<f64> {
        taus.iter().map(|&t| self.quantile(t)).collect()
    }
}

/// Adapts a closure.
pub struct FnQuantile<F>(pub F);

impl<F: Fn(f64) -> f64> QuantileFunction for FnQuantile<F> {
    fn quantile(&self, tau: f64) -> f64 {
        (self.0)(tau)
    }
}

/// State-conditioned nets are evaluated with a zero feature contribution.
impl QuantileFunction for MonotonicQuantileNet {
    fn quantile(&self, tau: f64) -> f64 {
        self.quantiles(&[tau])[0]
    }

    fn quantiles(&self, taus: &[f64]) -> Vec<f64> {
        let p = self.prepare();
        let mut s = self.scratch();
        taus.iter()
            .map(|&t| self.eval(&p, 2.0 * t - 1.0, None, &mut s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityEstimate {
    Finite(f64),
    /// The quantile function is flat here; the density is unbounded.
    Unbounded,
}

impl DensityEstimate {
    pub fn value(self) -> Option<f64> {
        match self {
            DensityEstimate::Finite(v) => Some(v),
            DensityEstimate::Unbounded => None,
        }
    }
}

/// Density at the action `Ĝ(τ)`: the reciprocal of `∂Ĝ/∂τ`, estimated by a
/// central difference with step `h`.
pub fn likelihood<Q: QuantileFunction + ?Sized>(q: &Q, tau: f64, h: f64) -> Result<DensityEstimate> {
    if !(h > 0.0) || !(tau >= h && tau <= 1.0 - h) {
        return Err(Error::TauOutOfRange(tau));
    }
    let slope = (q.quantile(tau + h) - q.quantile(tau - h)) / (2.0 * h);
    if slope <= 1e-12 || !slope.is_finite() {
        return Ok(DensityEstimate::Unbounded);
    }
    Ok(DensityEstimate::Finite(1.0 / slope))
}

/// CRPS of the quantile function against an observation `z`:
/// `∫ 2 ρ_τ(z − q(τ)) dτ` by the midpoint rule on `n` cells.
pub fn crps<Q: QuantileFunction + ?Sized>(q: &Q, z: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidConfig("CRPS grid needs at least 2 points".into()));
    }
    let taus: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let values = q.quantiles(&taus);
    Ok(taus
        .iter()
        .zip(values)
        .map(|(&t, v)| 2.0 * quantile_loss(t, z - v))
        .sum::<f64>()
        / n as f64)
}
