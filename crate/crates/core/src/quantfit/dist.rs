use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::score::QuantileFunction;
use crate::error::{Error, Result};

/// The three 1-D targets of the fitting benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    /// N(0, 1).
    Gaussian,
    /// Equal mixture of N(−1, 0.5²) and N(1, 0.5²).
    BimodalGaussian,
    /// Equal mixture of U([−1, −0.5]) and U([0.5, 1]).
    DiscontinuousUniform,
}

const MODE_STD: f64 = 0.5;

impl DistributionSpec {
    pub const ALL: [DistributionSpec; 3] = [
        DistributionSpec::Gaussian,
        DistributionSpec::BimodalGaussian,
        DistributionSpec::DiscontinuousUniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionSpec::Gaussian => "gaussian",
            DistributionSpec::BimodalGaussian => "bimodal",
            DistributionSpec::DiscontinuousUniform => "discontinuous_uniform",
        }
    }

    pub fn support(self) -> (f64, f64) {
        match self {
            DistributionSpec::DiscontinuousUniform => (-1.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::Gaussian => StandardNormal.sample(rng),
            DistributionSpec::BimodalGaussian => {
                let mean = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let z: f64 = StandardNormal.sample(rng);
                mean + MODE_STD * z
            }
            DistributionSpec::DiscontinuousUniform => {
                let lo = if rng.random::<bool>() { 0.5 } else { -1.0 };
                lo + 0.5 * rng.random::<f64>()
            }
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        match self {
            DistributionSpec::Gaussian => std_normal().cdf(x),
            DistributionSpec::BimodalGaussian => {
                let n = std_normal();
                0.5 * n.cdf((x + 1.0) / MODE_STD) + 0.5 * n.cdf((x - 1.0) / MODE_STD)
            }
            DistributionSpec::DiscontinuousUniform => {
                if x <= -1.0 {
                    0.0
                } else if x <= -0.5 {
                    x + 1.0
                } else if x <= 0.5 {
                    0.5
                } else if x <= 1.0 {
                    x
                } else {
                    1.0
                }
            }
        }
    }

    pub fn pdf(self, x: f64) -> f64 {
        match self {
            DistributionSpec::Gaussian => std_normal().pdf(x),
            DistributionSpec::BimodalGaussian => {
                let n = std_normal();
                (0.5 * n.pdf((x + 1.0) / MODE_STD) + 0.5 * n.pdf((x - 1.0) / MODE_STD)) / MODE_STD
            }
            DistributionSpec::DiscontinuousUniform => {
                if (-1.0..=-0.5).contains(&x) || (0.5..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Analytic inverse CDF. The discontinuous uniform takes its left limit
    /// `−0.5` at `τ = 0.5`.
    pub fn analytic_quantile(self, tau: f64) -> f64 {
        match self {
            DistributionSpec::Gaussian => std_normal().inverse_cdf(tau),
            DistributionSpec::BimodalGaussian => self.invert_cdf(tau),
            DistributionSpec::DiscontinuousUniform => {
                if tau <= 0.5 {
                    -1.0 + tau
                } else {
                    0.5 + (tau - 0.5)
                }
            }
        }
    }

    fn invert_cdf(self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if tau >= 1.0 {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo) > tau {
            lo *= 2.0;
        }
        while self.cdf(hi) < tau {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

impl QuantileFunction for DistributionSpec {
    fn quantile(&self, tau: f64) -> f64 {
        self.analytic_quantile(tau)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "normal" => Ok(DistributionSpec::Gaussian),
            "bimodal" | "bimodal_gaussian" | "bi_modal" => Ok(DistributionSpec::BimodalGaussian),
            "discontinuous_uniform" | "discontinuous" | "uniform_discontinuous" => {
                Ok(DistributionSpec::DiscontinuousUniform)
            }
            other => Err(Error::InvalidConfig(format!("unknown distribution `{other}`"))),
        }
    }
}
