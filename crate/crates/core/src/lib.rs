//! Monotonic quantile networks and quantile-regression policy learning.
//!
//! The crate is layered bottom-up:
//!
//! * [`diffcore`]: dense layers with hand-written backward passes, Adam.
//! * [`mononet`]: quantile networks that are non-decreasing in their
//!   quantile input for every parameter setting.
//! * [`quantfit`]: quantile regression on 1-D target distributions, CRPS
//!   and density recovery.
//! * [`rlcore`]: the advantage-weighted quantile-regression agent, GAE,
//!   a value critic and the Gaussian baselines.
//! * [`envs`]: continuous Rock-Paper-Scissors and the Choice memory game.
//!
//! All arithmetic is `f64`. Every stochastic draw comes from a named
//! substream of a single run seed (see [`rng`]).

pub mod diffcore;
pub mod envs;
pub mod error;
pub mod mononet;
pub mod quantfit;
pub mod rlcore;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use mononet::{Architecture, MonotonicQuantileNet, NetConfig, QuantileInput};
pub use quantfit::{DistributionSpec, FitConfig, FitReport, QuantileFunction};
pub use rlcore::{QrdrlHyper, RolloutBatch, Transition};
pub use rng::SeedStream;
