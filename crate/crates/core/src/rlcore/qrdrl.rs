use rand::Rng;

use super::policy::QuantilePolicy;
use crate::diffcore::Parameterized;
use crate::error::{Error, Result};
use crate::quantfit::{quantile_loss, quantile_loss_grad};

/// One `(s, a, A)` tuple of a minibatch. Actions and advantages are plain
/// numbers: no gradient flows through them.
#[derive(Debug, Clone, Copy)]
pub struct LossTuple<'a> {
    pub state: &'a [f64],
    pub action: &'a [f64],
    pub advantage: f64,
}

/// Supplies the quantile levels used inside the loss.
pub trait TauSource {
    fn next_tau(&mut self) -> f64;
}

/// Fresh `U[0,1)` draws.
pub struct RngTaus<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> TauSource for RngTaus<'_, R> {
    fn next_tau(&mut self) -> f64 {
        self.0.random()
    }
}

/// A fixed list of levels, cycled. Used to pin the loss in tests.
#[derive(Debug, Clone)]
pub struct FixedTaus {
    taus: Vec<f64>,
    next: usize,
}

impl FixedTaus {
    pub fn new(taus: Vec<f64>) -> Self {
        assert!(!taus.is_empty(), "FixedTaus needs at least one level");
        Self { taus, next: 0 }
    }
}

impl TauSource for FixedTaus {
    fn next_tau(&mut self) -> f64 {
        let t = self.taus[self.next % self.taus.len()];
        self.next += 1;
        t
    }
}

/// Regularized advantage-weighted quantile loss
///
/// ```text
/// mean_{i, k, j} (A_i + β) · ρ_{τ_ikj}(a_ij − Ĝ_j(τ_ikj, φ(s_i)))
/// ```
///
/// over tuples `i`, `k` draws per tuple and action dimensions `j`. Levels are
/// drawn tuple by tuple, then dimension by dimension, `k` at a time. With
/// `accumulate` the gradient is added to the policy's parameter gradients.
pub fn qrdrl_loss<T: TauSource + ?Sized>(
    policy: &mut QuantilePolicy,
    tuples: &[LossTuple<'_>],
    k: usize,
    beta: f64,
    taus: &mut T,
    accumulate: bool,
) -> Result<f64> {
    if tuples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let dims = policy.action_dim();
    let norm = 1.0 / (tuples.len() * k * dims) as f64;
    let (mut extractor, nets) = policy.parts_mut();
    let prepared: Vec<_> = nets.iter().map(|n| n.prepare()).collect();
    let mut scratch: Vec<_> = nets.iter().map(|n| n.scratch()).collect();
    let mut total = 0.0;

    for tuple in tuples {
        if tuple.action.len() != dims {
            return Err(Error::DimensionMismatch {
                context: "loss tuple action",
                expected: dims,
                actual: tuple.action.len(),
            });
        }
        let cache = match extractor.as_deref() {
            Some(e) => Some(e.forward_cached(tuple.state)?),
            None => None,
        };
        let phi = cache.as_ref().map(|c| c.output());
        let mut feature_grad = phi.map(|p| vec![0.0; p.len()]);
        let weight = tuple.advantage + beta;

        for (j, net) in nets.iter_mut().enumerate() {
            let offset = net.feature_offset(phi)?;
            let mut offset_grad = offset.as_ref().map(|o| vec![0.0; o.len()]);
            for _ in 0..k {
                let tau = taus.next_tau();
                let g = net.eval(&prepared[j], 2.0 * tau - 1.0, offset.as_deref(), &mut scratch[j]);
                let delta = tuple.action[j] - g;
                total += weight * quantile_loss(tau, delta);
                if accumulate {
                    let upstream = -weight * quantile_loss_grad(tau, delta) * norm;
                    net.backprop(&prepared[j], &scratch[j], upstream, offset_grad.as_deref_mut());
                }
            }
            if accumulate {
                if let (Some(og), Some(p), Some(fg)) = (&offset_grad, phi, feature_grad.as_mut()) {
                    for (a, b) in fg.iter_mut().zip(net.backprop_features(p, og)?) {
                        *a += b;
                    }
                }
            }
        }
        if accumulate {
            if let (Some(e), Some(c), Some(fg)) = (extractor.as_deref_mut(), &cache, &feature_grad) {
                e.backward(c, fg)?;
            }
        }
    }
    Ok(total * norm)
}

impl QuantilePolicy {
    /// Clears accumulated gradients (convenience for training loops).
    pub fn clear_grads(&mut self) {
        self.zero_grads();
    }
}
