use rand::Rng;

use crate::diffcore::{Activation, Dense, DenseCache, Parameter, Parameterized};
use crate::error::{Error, Result};
use crate::mononet::{Architecture, MonotonicQuantileNet, NetConfig};

/// One relu-split quantile net per action dimension, optionally conditioned
/// on a shared tanh feature extractor whose output is injected into every
/// net's hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantilePolicy {
    extractor: Option<Dense>,
    nets: Vec<MonotonicQuantileNet>,
}

impl QuantilePolicy {
    /// State-conditioned policy: `obs → feature_sizes (tanh)`, then
    /// `action_dim` relu-split nets of width `quantile_width`.
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        quantile_width: usize,
        feature_sizes: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if action_dim == 0 || feature_sizes.is_empty() {
            return Err(Error::InvalidConfig("policy needs actions and a feature layer".into()));
        }
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(feature_sizes);
        let extractor = Dense::init(&sizes, Activation::Tanh, Activation::Tanh, rng)?;
        let feature_dim = *feature_sizes.last().expect("non-empty");
        let cfg = NetConfig::new(Architecture::ReluSplit, quantile_width).with_features(feature_dim);
        let nets = (0..action_dim)
            .map(|_| MonotonicQuantileNet::init_with_rng(cfg.clone(), rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            extractor: Some(extractor),
            nets,
        })
    }

    /// Stateless policy (bandit setting): a single relu-split net on τ.
    pub fn stateless<R: Rng + ?Sized>(quantile_width: usize, rng: &mut R) -> Result<Self> {
        let cfg = NetConfig::new(Architecture::ReluSplit, quantile_width);
        Ok(Self {
            extractor: None,
            nets: vec![MonotonicQuantileNet::init_with_rng(cfg, rng)?],
        })
    }

    pub fn from_parts(extractor: Option<Dense>, nets: Vec<MonotonicQuantileNet>) -> Result<Self> {
        if nets.is_empty() {
            return Err(Error::InvalidConfig("policy needs at least one net".into()));
        }
        let feature_dim = extractor.as_ref().map(Dense::out_dim);
        if nets.iter().any(|n| n.feature_dim() != feature_dim) {
            return Err(Error::FeatureMismatch("disagrees with the extractor about"));
        }
        Ok(Self { extractor, nets })
    }

    pub fn action_dim(&self) -> usize {
        self.nets.len()
    }

    pub fn nets(&self) -> &[MonotonicQuantileNet] {
        &self.nets
    }

    pub fn extractor(&self) -> Option<&Dense> {
        self.extractor.as_ref()
    }

    pub(crate) fn parts_mut(&mut self) -> (Option<&mut Dense>, &mut [MonotonicQuantileNet]) {
        (self.extractor.as_mut(), &mut self.nets)
    }

    /// `φ(s)` with its cache, or `None` for a stateless policy.
    pub fn features(&self, state: &[f64]) -> Result<Option<DenseCache>> {
        self.extractor
            .as_ref()
            .map(|e| e.forward_cached(state))
            .transpose()
    }

    /// Samples `τ ~ U[0,1)^d` and returns `(action, τ)`.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
        let feats = self.features(state)?;
        crate::mononet::action_sample(&self.nets, feats.as_ref().map(|c| c.output()), rng)
    }

    /// Action at fixed quantile levels.
    pub fn action_at(&self, state: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        if taus.len() != self.nets.len() {
            return Err(Error::DimensionMismatch {
                context: "policy taus",
                expected: self.nets.len(),
                actual: taus.len(),
            });
        }
        let feats = self.features(state)?;
        let phi = feats.as_ref().map(|c| c.output());
        self.nets
            .iter()
            .zip(taus)
            .map(|(n, &t)| n.forward(crate::mononet::QuantileInput::new(t)?, phi))
            .collect()
    }

    /// `n` independent action samples in one state.
    pub fn sample_actions<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let feats = self.features(state)?;
        let phi = feats.as_ref().map(|c| c.output());
        let prepared: Vec<_> = self.nets.iter().map(|n| n.prepare()).collect();
        let offsets = self
            .nets
            .iter()
            .map(|net| net.feature_offset(phi))
            .collect::<Result<Vec<_>>>()?;
        let mut scratch: Vec<_> = self.nets.iter().map(|n| n.scratch()).collect();
        Ok((0..n)
            .map(|_| {
                self.nets
                    .iter()
                    .enumerate()
                    .map(|(i, net)| {
                        let tau: f64 = rng.random();
                        net.eval(&prepared[i], 2.0 * tau - 1.0, offsets[i].as_deref(), &mut scratch[i])
                    })
                    .collect()
            })
            .collect())
    }
}

impl Parameterized for QuantilePolicy {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut v = self.extractor.as_ref().map(|e| e.parameters()).unwrap_or_default();
        for n in &self.nets {
            v.extend(n.parameters());
        }
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = self
            .extractor
            .as_mut()
            .map(|e| e.parameters_mut())
            .unwrap_or_default();
        for n in &mut self.nets {
            v.extend(n.parameters_mut());
        }
        v
    }
}
