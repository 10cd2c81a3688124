use std::borrow::Cow;

use rand::Rng;

use super::activation::Activation;
use super::linear::Linear;
use super::param::{Constraint, Parameter, Parameterized};
use crate::error::{Error, Result};

/// A stack of unconstrained fully connected layers, each followed by its own
/// activation. Used for feature extractors, critics and Gaussian heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    layers: Vec<Linear>,
    activations: Vec<Activation>,
}

/// Per-layer inputs and pre-activations of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct DenseCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl DenseCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Dense {
    pub fn new(layers: Vec<Linear>, activations: Vec<Activation>) -> Result<Self> {
        if layers.len() != activations.len() || layers.is_empty() {
            return Err(Error::InvalidConfig(
                "dense stack needs one activation per layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    context: "dense layer chaining",
                    expected: pair[0].out_dim(),
                    actual: pair[1].in_dim(),
                });
            }
        }
        Ok(Self {
            layers,
            activations,
        })
    }

    /// `sizes = [in, h1, ..., out]`; hidden layers use `hidden`, the last
    /// layer uses `last`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        last: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidConfig("dense stack needs at least one layer".into()));
        }
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Linear::uniform_init(sizes[i], sizes[i + 1], true, rng))
            .collect();
        let activations = (0..n)
            .map(|i| if i + 1 == n { last } else { hidden })
            .collect();
        Self::new(layers, activations)
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.post.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<DenseCache> {
        self.layers[0].check_input(input)?;
        let mut cache = DenseCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_vec();
        for (layer, &act) in self.layers.iter().zip(&self.activations) {
            let w = weights(layer);
            let mut z = vec![0.0; layer.out_dim()];
            layer.apply(&w, &x, &mut z);
            let y: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            cache.inputs.push(std::mem::replace(&mut x, y.clone()));
            cache.pre.push(z);
            cache.post.push(y);
        }
        Ok(cache)
    }

    /// Backpropagates `upstream` (gradient w.r.t. the output) and returns the
    /// gradient w.r.t. the input.
    pub fn backward(&mut self, cache: &DenseCache, upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.out_dim() {
            return Err(Error::DimensionMismatch {
                context: "dense upstream gradient",
                expected: self.out_dim(),
                actual: upstream.len(),
            });
        }
        let mut g = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let act = self.activations[i];
            let dz: Vec<f64> = g
                .iter()
                .zip(&cache.pre[i])
                .zip(&cache.post[i])
                .map(|((&u, &z), &y)| act.backward(z, y, u))
                .collect();
            let layer = &mut self.layers[i];
            let w = weights(layer).into_owned();
            let mut gi = vec![0.0; layer.in_dim()];
            layer.accumulate(&w, &cache.inputs[i], &dz, Some(&mut gi));
            g = gi;
        }
        Ok(g)
    }
}

fn weights(layer: &Linear) -> Cow<'_, [f64]> {
    match layer.weight.constraint() {
        Constraint::Unconstrained => Cow::Borrowed(layer.weight.value()),
        Constraint::ExpPositive => Cow::Owned(layer.weight.effective()),
    }
}

impl Parameterized for Dense {
    fn parameters(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(|l| l.parameters()).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.parameters_mut())
            .collect()
    }
}
