use serde::{Deserialize, Serialize};

/// Element-wise non-linearities. Subgradients at the relu/inv_relu kink are 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    /// `max(0, x)`, convex.
    Relu,
    /// `min(0, x)`, concave.
    InvRelu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::InvRelu => x.min(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// d(output)/d(input) given the pre-activation `x` and output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::InvRelu => {
                if x < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    #[inline]
    pub fn backward(self, x: f64, y: f64, upstream: f64) -> f64 {
        upstream * self.derivative(x, y)
    }
}
