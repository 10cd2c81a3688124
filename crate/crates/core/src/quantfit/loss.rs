use super::score::QuantileFunction;

/// Pinball loss `ρ_τ(δ) = (τ − 1{δ<0}) · δ`.
#[inline]
pub fn quantile_loss(tau: f64, delta: f64) -> f64 {
    (tau - if delta < 0.0 { 1.0 } else { 0.0 }) * delta
}

/// `dρ_τ/dδ`, taking the right derivative `τ` at `δ = 0`.
#[inline]
pub fn quantile_loss_grad(tau: f64, delta: f64) -> f64 {
    tau - if delta < 0.0 { 1.0 } else { 0.0 }
}

/// Mean of `ρ_τ(z − q(τ))` over `(τ, z)` pairs.
pub fn mean_quantile_loss<Q: QuantileFunction + ?Sized>(q: &Q, pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .map(|&(tau, z)| quantile_loss(tau, z - q.quantile(tau)))
        .sum::<f64>()
        / pairs.len() as f64
}
