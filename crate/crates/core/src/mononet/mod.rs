//! Quantile networks that are non-decreasing in the quantile input.
//!
//! All three architectures take the quantile level scaled to `[-1, 1]`,
//! project it through exp-positive weights into one hidden layer and combine
//! the hidden units monotonically:
//!
//! * [`Architecture::ReluSplit`]: half the units `max(0, x)`, half
//!   `min(0, x)`, then an exp-positive output layer. Sums of convex and
//!   concave pieces with positive coefficients give any monotone
//!   piecewise-linear shape.
//! * [`Architecture::TanhPositive`]: tanh units, exp-positive output layer.
//! * [`Architecture::MaxMin`]: linear units pooled by max within groups and
//!   min across groups; no output layer.
//!
//! An optional unconstrained feature injection adds `F · φ(s)` to the hidden
//! pre-activations. It does not depend on τ, so monotonicity is preserved.

mod serialize;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{Activation, Constraint, Linear, Parameter, Parameterized};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    ReluSplit,
    TanhPositive,
    MaxMin,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::MaxMin,
        Architecture::TanhPositive,
        Architecture::ReluSplit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::ReluSplit => "relu",
            Architecture::TanhPositive => "tanh",
            Architecture::MaxMin => "maxmin",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "relu" | "relu_split" | "relusplit" => Ok(Architecture::ReluSplit),
            "tanh" | "tanh_positive" => Ok(Architecture::TanhPositive),
            "maxmin" | "max_min" => Ok(Architecture::MaxMin),
            other => Err(Error::InvalidConfig(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub architecture: Architecture,
    pub hidden_width: usize,
    /// Number of min-pooled groups; only used by [`Architecture::MaxMin`].
    #[serde(default = "default_groups")]
    pub groups: usize,
    /// Dimension of injected state features, if any.
    #[serde(default)]
    pub feature_dim: Option<usize>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_groups() -> usize {
    12
}

fn default_sigma() -> f64 {
    3.0
}

impl NetConfig {
    pub fn new(architecture: Architecture, hidden_width: usize) -> Self {
        Self {
            architecture,
            hidden_width,
            groups: default_groups(),
            feature_dim: None,
            sigma: default_sigma(),
        }
    }

    /// Parameter-matched widths used by the distribution-fitting benchmark:
    /// 64 units for relu/tanh, 96 units in 12 groups of 8 for max-min.
    pub fn benchmark(architecture: Architecture) -> Self {
        let width = match architecture {
            Architecture::MaxMin => 96,
            _ => 64,
        };
        Self::new(architecture, width)
    }

    pub fn with_features(mut self, dim: usize) -> Self {
        self.feature_dim = Some(dim);
        self
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.hidden_width;
        let bad = |reason| Error::InvalidWidth {
            architecture: self.architecture.name(),
            width: w,
            reason,
        };
        match self.architecture {
            Architecture::ReluSplit if w < 2 || !w.is_multiple_of(2) => Err(bad("must be even and at least 2")),
            Architecture::TanhPositive if w == 0 => Err(bad("must be positive")),
            Architecture::MaxMin if self.groups == 0 || w == 0 || !w.is_multiple_of(self.groups) => {
                Err(bad("must be a positive multiple of the group count"))
            }
            _ if !(self.sigma > 0.0) => Err(Error::InvalidConfig("sigma must be positive".into())),
            _ if self.feature_dim == Some(0) => {
                Err(Error::InvalidConfig("feature dimension must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A quantile level together with the `[-1, 1]` value fed to the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileInput {
    tau: f64,
    scaled: f64,
}

impl QuantileInput {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::TauOutOfRange(tau));
        }
        Ok(Self {
            tau,
            scaled: 2.0 * tau - 1.0,
        })
    }

    pub fn tau(self) -> f64 {
        self.tau
    }

    pub fn scaled(self) -> f64 {
        self.scaled
    }
}

/// Effective (exponentiated) weights, computed once per parameter update and
/// reused for every evaluation until the next update.
#[derive(Debug, Clone)]
pub struct Prepared {
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

/// Intermediate values of one evaluation, consumed by the matching backprop.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    x: f64,
    pre: Vec<f64>,
    post: Vec<f64>,
    winner: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicQuantileNet {
    config: NetConfig,
    seed: Option<u64>,
    hidden: Linear,
    output: Option<Linear>,
    injection: Option<Linear>,
}

impl MonotonicQuantileNet {
    /// Initializes from a run seed. Weights are `log(U(0, sqrt(σ / F_in)])`,
    /// biases zero.
    pub fn init(config: NetConfig, seed: u64) -> Result<Self> {
        let mut rng = SeedStream::new(seed).substream("mononet/init");
        let mut net = Self::init_with_rng(config, &mut rng)?;
        net.seed = Some(seed);
        Ok(net)
    }

    pub fn init_with_rng<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let width = config.hidden_width;
        let hidden = Linear::new(
            log_uniform_weights(width, 1, config.sigma, rng),
            Some(Parameter::zeros(width, 1, Constraint::Unconstrained)),
        )?;
        let output = match config.architecture {
            Architecture::MaxMin => None,
            _ => Some(Linear::new(
                log_uniform_weights(1, width, config.sigma, rng),
                Some(Parameter::zeros(1, 1, Constraint::Unconstrained)),
            )?),
        };
        let injection = config
            .feature_dim
            .map(|d| Linear::uniform_init(d, width, false, rng));
        Ok(Self {
            config,
            seed: None,
            hidden,
            output,
            injection,
        })
    }

    /// Assembles a net from explicit layers, e.g. for constructed weights.
    pub fn from_parts(
        config: NetConfig,
        hidden: Linear,
        output: Option<Linear>,
        injection: Option<Linear>,
    ) -> Result<Self> {
        config.validate()?;
        let width = config.hidden_width;
        let positive = |l: &Linear| l.weight.constraint() == Constraint::ExpPositive;
        if hidden.in_dim() != 1 || hidden.out_dim() != width || !positive(&hidden) {
            return Err(Error::InvalidConfig(
                "hidden layer must be an exp-positive width x 1 map".into(),
            ));
        }
        match (&output, config.architecture) {
            (None, Architecture::MaxMin) => {}
            (Some(o), Architecture::ReluSplit | Architecture::TanhPositive)
                if o.in_dim() == width && o.out_dim() == 1 && positive(o) => {}
            _ => {
                return Err(Error::InvalidConfig(
                    "output layer must be an exp-positive 1 x width map (absent for max-min)".into(),
                ))
            }
        }
        match (&injection, config.feature_dim) {
            (None, None) => {}
            (Some(f), Some(d)) if f.in_dim() == d && f.out_dim() == width => {}
            _ => return Err(Error::FeatureMismatch("configuration disagrees with")),
        }
        Ok(Self {
            config,
            seed: None,
            hidden,
            output,
            injection,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn architecture(&self) -> Architecture {
        self.config.architecture
    }

    pub fn hidden_width(&self) -> usize {
        self.config.hidden_width
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.config.feature_dim
    }

    pub fn hidden_layer(&self) -> &Linear {
        &self.hidden
    }

    pub fn hidden_layer_mut(&mut self) -> &mut Linear {
        &mut self.hidden
    }

    pub fn output_layer(&self) -> Option<&Linear> {
        self.output.as_ref()
    }

    pub fn output_layer_mut(&mut self) -> Option<&mut Linear> {
        self.output.as_mut()
    }

    pub fn injection_layer(&self) -> Option<&Linear> {
        self.injection.as_ref()
    }

    /// Activation of hidden unit `j`. For relu-split the first `⌈w/2⌉`
    /// units are relu, the rest inverse relu.
    pub fn activation_of(&self, j: usize) -> Activation {
        match self.config.architecture {
            Architecture::ReluSplit => {
                if j < self.config.hidden_width.div_ceil(2) {
                    Activation::Relu
                } else {
                    Activation::InvRelu
                }
            }
            Architecture::TanhPositive => Activation::Tanh,
            Architecture::MaxMin => Activation::Identity,
        }
    }

    pub fn prepare(&self) -> Prepared {
        let (w_out, b_out) = match &self.output {
            Some(o) => (o.effective_weight(), o.bias.as_ref().map_or(0.0, |b| b.value()[0])),
            None => (Vec::new(), 0.0),
        };
        Prepared {
            w_in: self.hidden.effective_weight(),
            b_in: self
                .hidden
                .bias
                .as_ref()
                .map_or_else(|| vec![0.0; self.config.hidden_width], |b| b.value().to_vec()),
            w_out,
            b_out,
        }
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            x: 0.0,
            pre: vec![0.0; self.config.hidden_width],
            post: vec![0.0; self.config.hidden_width],
            winner: 0,
        }
    }

    /// `F · φ` for a state, or `None` for nets without feature injection.
    /// Errors if features are supplied iff the net has no injection.
    pub fn feature_offset(&self, features: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
        match (&self.injection, features) {
            (None, None) => Ok(None),
            (Some(f), Some(phi)) => {
                f.check_input(phi)?;
                let mut out = vec![0.0; self.config.hidden_width];
                f.apply(f.weight.value(), phi, &mut out);
                Ok(Some(out))
            }
            (None, Some(_)) => Err(Error::FeatureMismatch("has no")),
            (Some(_), None) => Err(Error::FeatureMismatch("requires features for its")),
        }
    }

    /// Evaluates `Ĝ(x)` at a scaled quantile `x ∈ [-1, 1]`, leaving what
    /// [`Self::backprop`] needs in `scratch`. No validation; this is the
    /// training hot path.
    #[inline]
    pub fn eval(&self, p: &Prepared, x: f64, offset: Option<&[f64]>, s: &mut Scratch) -> f64 {
        s.x = x;
        let w = self.config.hidden_width;
        for j in 0..w {
            let mut z = p.w_in[j] * x + p.b_in[j];
            if let Some(o) = offset {
                z += o[j];
            }
            s.pre[j] = z;
        }
        match self.config.architecture {
            Architecture::MaxMin => {
                let size = w / self.config.groups;
                let mut best = f64::INFINITY;
                let mut winner = 0;
                for g in 0..self.config.groups {
                    let group = &s.pre[g * size..(g + 1) * size];
                    let (mut arg, mut max) = (0, group[0]);
                    for (i, &v) in group.iter().enumerate().skip(1) {
                        if v > max {
                            max = v;
                            arg = i;
                        }
                    }
                    if max < best {
                        best = max;
                        winner = g * size + arg;
                    }
                }
                s.winner = winner;
                best
            }
            Architecture::ReluSplit => {
                let half = w.div_ceil(2);
                let mut acc = p.b_out;
                for j in 0..w {
                    let z = s.pre[j];
                    let y = if j < half { z.max(0.0) } else { z.min(0.0) };
                    s.post[j] = y;
                    acc += p.w_out[j] * y;
                }
                acc
            }
            Architecture::TanhPositive => {
                let mut acc = p.b_out;
                for j in 0..w {
                    let y = s.pre[j].tanh();
                    s.post[j] = y;
                    acc += p.w_out[j] * y;
                }
                acc
            }
        }
    }

    /// Accumulates `upstream · ∂Ĝ/∂θ` for the evaluation recorded in
    /// `scratch`. When `offset_grad` is given, `upstream · ∂Ĝ/∂offset` is
    /// added to it.
    #[inline]
    pub fn backprop(
        &mut self,
        p: &Prepared,
        s: &Scratch,
        upstream: f64,
        mut offset_grad: Option<&mut [f64]>,
    ) {
        if upstream == 0.0 {
            return;
        }
        let w = self.config.hidden_width;
        let x = s.x;
        if self.config.architecture == Architecture::MaxMin {
            let j = s.winner;
            self.hidden.weight.grad_mut()[j] += upstream * x * p.w_in[j];
            if let Some(b) = self.hidden.bias.as_mut() {
                b.grad_mut()[j] += upstream;
            }
            if let Some(og) = offset_grad {
                og[j] += upstream;
            }
            return;
        }
        let output = self.output.as_mut().expect("non max-min nets have an output layer");
        {
            let gw = output.weight.grad_mut();
            for j in 0..w {
                gw[j] += upstream * s.post[j] * p.w_out[j];
            }
        }
        if let Some(b) = output.bias.as_mut() {
            b.grad_mut()[0] += upstream;
        }
        let half = w.div_ceil(2);
        let tanh = self.config.architecture == Architecture::TanhPositive;
        let (gw, gb) = {
            let Linear { weight, bias } = &mut self.hidden;
            (weight.grad_mut(), bias.as_mut().map(|b| b.grad_mut()))
        };
        let mut gb = gb;
        for j in 0..w {
            let d = if tanh {
                1.0 - s.post[j] * s.post[j]
            } else if j < half {
                if s.pre[j] > 0.0 { 1.0 } else { 0.0 }
            } else if s.pre[j] < 0.0 {
                1.0
            } else {
                0.0
            };
            if d == 0.0 {
                continue;
            }
            let dz = upstream * p.w_out[j] * d;
            gw[j] += dz * x * p.w_in[j];
            if let Some(gb) = gb.as_deref_mut() {
                gb[j] += dz;
            }
            if let Some(og) = offset_grad.as_deref_mut() {
                og[j] += dz;
            }
        }
    }

    /// Pushes an accumulated offset gradient through the feature injection,
    /// returning the gradient w.r.t. the features.
    pub fn backprop_features(&mut self, features: &[f64], offset_grad: &[f64]) -> Result<Vec<f64>> {
        let f = self
            .injection
            .as_mut()
            .ok_or(Error::FeatureMismatch("has no"))?;
        f.check_input(features)?;
        let w = f.weight.value().to_vec();
        let mut grad = vec![0.0; features.len()];
        f.accumulate(&w, features, offset_grad, Some(&mut grad));
        Ok(grad)
    }

    /// `Ĝ(τ[, φ])`.
    pub fn forward(&self, q: QuantileInput, features: Option<&[f64]>) -> Result<f64> {
        let offset = self.feature_offset(features)?;
        let p = self.prepare();
        let mut s = self.scratch();
        Ok(self.eval(&p, q.scaled(), offset.as_deref(), &mut s))
    }

    /// Forward pass of a max-min net without features: min over groups of the
    /// max over each group's linear units.
    pub fn maxmin_forward(&self, q: QuantileInput) -> Result<f64> {
        if self.config.architecture != Architecture::MaxMin {
            return Err(Error::WrongArchitecture { expected: "maxmin" });
        }
        self.forward(q, None)
    }

    /// Evaluates on many quantile levels with one weight preparation.
    pub fn forward_many(&self, taus: &[f64], features: Option<&[f64]>) -> Result<Vec<f64>> {
        let offset = self.feature_offset(features)?;
        let p = self.prepare();
        let mut s = self.scratch();
        taus.iter()
            .map(|&t| {
                let q = QuantileInput::new(t)?;
                Ok(self.eval(&p, q.scaled(), offset.as_deref(), &mut s))
            })
            .collect()
    }
}

fn log_uniform_weights<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    sigma: f64,
    rng: &mut R,
) -> Parameter {
    let bound = (sigma / cols as f64).sqrt();
    // 1 - U[0,1) lies in (0, 1], so the log is finite.
    let values = (0..rows * cols)
        .map(|_| ((1.0 - rng.random::<f64>()) * bound).ln())
        .collect();
    Parameter::from_values(rows, cols, values, Constraint::ExpPositive)
        .expect("shape is consistent by construction")
}

impl Parameterized for MonotonicQuantileNet {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut v = self.hidden.parameters();
        if let Some(o) = &self.output {
            v.extend(o.parameters());
        }
        if let Some(f) = &self.injection {
            v.extend(f.parameters());
        }
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = self.hidden.parameters_mut();
        if let Some(o) = &mut self.output {
            v.extend(o.parameters_mut());
        }
        if let Some(f) = &mut self.injection {
            v.extend(f.parameters_mut());
        }
        v
    }
}

/// Draws `τ ~ U[0,1)` per action dimension and returns `(actions, taus)`.
pub fn action_sample<R: Rng + ?Sized>(
    nets: &[MonotonicQuantileNet],
    features: Option<&[f64]>,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if nets.is_empty() {
        return Err(Error::InvalidConfig("need at least one action dimension".into()));
    }
    let mut actions = Vec::with_capacity(nets.len());
    let mut taus = Vec::with_capacity(nets.len());
    for net in nets {
        let tau: f64 = rng.random();
        actions.push(net.forward(QuantileInput::new(tau)?, features)?);
        taus.push(tau);
    }
    Ok((actions, taus))
}

#[cfg(test)]
mod tests;
