//! Minimal reverse-mode machinery for small dense networks.
//!
//! There is no general graph: each layer type knows its own backward pass and
//! callers thread the cached forward values back in. Gradients accumulate in
//! the [`Parameter`]s until [`Parameterized::zero_grads`] is called.

mod activation;
mod adam;
mod checkpoint;
mod dense;
mod linear;
mod param;

pub use activation::Activation;
pub use adam::{linear_decay, AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use dense::{Dense, DenseCache};
pub use linear::{Linear, LinearCache};
pub use param::{Constraint, Parameter, Parameterized};
