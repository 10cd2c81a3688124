use rand::Rng;

use super::param::{Constraint, Parameter, Parameterized};
use crate::error::{Error, Result};

/// Affine map `W_eff · x + b`, where `W_eff` is `exp(W)` for exp-positive
/// weights. The bias is optional and always unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Parameter,
    pub bias: Option<Parameter>,
}

/// Values saved by [`Linear::forward`] for the matching backward call.
#[derive(Debug, Clone)]
pub struct LinearCache {
    pub input: Vec<f64>,
    pub effective_weight: Vec<f64>,
}

impl Linear {
    pub fn new(weight: Parameter, bias: Option<Parameter>) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weight.rows() {
                return Err(Error::DimensionMismatch {
                    context: "linear bias",
                    expected: weight.rows(),
                    actual: b.len(),
                });
            }
        }
        Ok(Self { weight, bias })
    }

    /// Unconstrained layer with `U(-1/sqrt(in), 1/sqrt(in))` weights and zero bias.
    pub fn uniform_init<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (in_dim.max(1) as f64).sqrt();
        Self::scaled_init(in_dim, out_dim, with_bias, bound, rng)
    }

    pub fn scaled_init<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        bound: f64,
        rng: &mut R,
    ) -> Self {
        let values = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let weight = Parameter::from_values(out_dim, in_dim, values, Constraint::Unconstrained)
            .expect("shape is consistent by construction");
        let bias = with_bias.then(|| Parameter::zeros(out_dim, 1, Constraint::Unconstrained));
        Self { weight, bias }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn effective_weight(&self) -> Vec<f64> {
        self.weight.effective()
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, LinearCache)> {
        self.check_input(input)?;
        let w = self.effective_weight();
        let mut out = vec![0.0; self.out_dim()];
        self.apply(&w, input, &mut out);
        Ok((
            out,
            LinearCache {
                input: input.to_vec(),
                effective_weight: w,
            },
        ))
    }

    /// Accumulates parameter gradients and returns the gradient with respect
    /// to the layer input.
    pub fn backward(&mut self, cache: &LinearCache, upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.out_dim() {
            return Err(Error::DimensionMismatch {
                context: "linear upstream gradient",
                expected: self.out_dim(),
                actual: upstream.len(),
            });
        }
        let mut grad_input = vec![0.0; self.in_dim()];
        self.accumulate(
            &cache.effective_weight,
            &cache.input,
            upstream,
            Some(&mut grad_input),
        );
        Ok(grad_input)
    }

    pub fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                context: "linear input",
                expected: self.in_dim(),
                actual: input.len(),
            });
        }
        Ok(())
    }

    /// Allocation-free forward with precomputed effective weights.
    #[inline]
    pub fn apply(&self, w_eff: &[f64], input: &[f64], out: &mut [f64]) {
        let cols = self.in_dim();
        debug_assert_eq!(input.len(), cols);
        debug_assert_eq!(out.len(), self.out_dim());
        for (r, o) in out.iter_mut().enumerate() {
            let row = &w_eff[r * cols..(r + 1) * cols];
            let mut acc = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            if let Some(b) = &self.bias {
                acc += b.value()[r];
            }
            *o = acc;
        }
    }

    /// Allocation-free backward matching [`Linear::apply`].
    #[inline]
    pub fn accumulate(
        &mut self,
        w_eff: &[f64],
        input: &[f64],
        upstream: &[f64],
        grad_input: Option<&mut [f64]>,
    ) {
        let cols = self.in_dim();
        let positive = self.weight.constraint() == Constraint::ExpPositive;
        {
            let gw = self.weight.grad_mut();
            for (r, &u) in upstream.iter().enumerate() {
                if u == 0.0 {
                    continue;
                }
                let row = &mut gw[r * cols..(r + 1) * cols];
                let wrow = &w_eff[r * cols..(r + 1) * cols];
                if positive {
                    for ((g, x), w) in row.iter_mut().zip(input).zip(wrow) {
                        *g += u * x * w;
                    }
                } else {
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += u * x;
                    }
                }
            }
        }
        if let Some(b) = &mut self.bias {
            for (g, u) in b.grad_mut().iter_mut().zip(upstream) {
                *g += u;
            }
        }
        if let Some(gi) = grad_input {
            for (r, &u) in upstream.iter().enumerate() {
                if u == 0.0 {
                    continue;
                }
                let wrow = &w_eff[r * cols..(r + 1) * cols];
                for (g, w) in gi.iter_mut().zip(wrow) {
                    *g += u * w;
                }
            }
        }
    }
}

impl Parameterized for Linear {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut v = vec![&self.weight];
        if let Some(b) = &self.bias {
            v.push(b);
        }
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = vec![&mut self.weight];
        if let Some(b) = &mut self.bias {
            v.push(b);
        }
        v
    }
}
