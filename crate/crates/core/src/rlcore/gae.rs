use super::RolloutBatch;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageEstimates {
    /// Normalized advantages, aligned with the batch.
    pub advantages: Vec<f64>,
    /// Un-normalized `A + V(s)`, the critic's regression targets.
    pub returns: Vec<f64>,
    /// Raw advantages before normalization.
    pub raw: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Generalized advantage estimation, computed backward in time:
///
/// ```text
/// δ_t = r_t + γ (1 − done_t) V(s_{t+1}) − V(s_t)
/// A_t = δ_t + γ λ (1 − done_t) A_{t+1}
/// ```
///
/// `V(s_{t+1})` of the last transition is the batch's bootstrap value.
pub fn gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<AdvantageEstimates> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let ts = &batch.transitions;
    let mut raw = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n {
            ts[t + 1].value_estimate
        } else {
            batch.bootstrap_value
        };
        let live = if ts[t].done { 0.0 } else { 1.0 };
        let delta = ts[t].reward + gamma * live * next_value - ts[t].value_estimate;
        next_adv = delta + gamma * lambda * live * next_adv;
        raw[t] = next_adv;
    }
    let returns = raw
        .iter()
        .zip(ts)
        .map(|(a, t)| a + t.value_estimate)
        .collect();
    let (advantages, mean, std) = normalize_advantages(&raw);
    Ok(AdvantageEstimates {
        advantages,
        returns,
        raw,
        mean,
        std,
    })
}

/// Shifts to zero mean and, when the spread is non-zero, scales to unit
/// (population) standard deviation. Returns `(normalized, mean, std)`.
pub fn normalize_advantages(raw: &[f64]) -> (Vec<f64>, f64, f64) {
    let mean = stats::mean(raw);
    let std = stats::std_dev(raw);
    let scale = if std > 0.0 { 1.0 / std } else { 1.0 };
    (raw.iter().map(|a| (a - mean) * scale).collect(), mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rlcore::Transition;

    fn tr(reward: f64, value: f64, done: bool) -> Transition {
        Transition {
            state: vec![],
            action: vec![0.0],
            tau: vec![0.5],
            reward,
            value_estimate: value,
            done,
        }
    }

    #[test]
    fn single_terminal_step() {
        let b = RolloutBatch::new(vec![tr(1.0, 0.0, true)], 0.0).unwrap();
        let est = gae(&b, 0.99, 0.95).unwrap();
        assert_eq!(est.raw, vec![1.0]);
        assert_eq!(est.returns, vec![1.0]);
    }

    #[test]
    fn gamma_zero_is_one_step_td() {
        let ts = vec![tr(1.0, 0.5, false), tr(-2.0, 0.25, false), tr(0.5, -1.0, true)];
        let b = RolloutBatch::new(ts.clone(), 3.0).unwrap();
        let est = gae(&b, 0.0, 0.7).unwrap();
        for (a, t) in est.raw.iter().zip(&ts) {
            assert_eq!(*a, t.reward - t.value_estimate);
        }
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(matches!(
            gae(&RolloutBatch::default(), 0.99, 0.95),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn normalized_stats() {
        let (n, _, _) = normalize_advantages(&[1.0, 2.0, 3.0, 10.0]);
        assert!(stats::mean(&n).abs() < 1e-12);
        assert!((stats::std_dev(&n) - 1.0).abs() < 1e-12);
        let (c, _, s) = normalize_advantages(&[4.0, 4.0]);
        assert_eq!(s, 0.0);
        assert_eq!(c, vec![0.0, 0.0]);
    }
}
