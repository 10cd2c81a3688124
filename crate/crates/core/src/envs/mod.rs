//! Toy environments: continuous Rock-Paper-Scissors against a retrained
//! Gaussian counter, and the Choice memory game.

mod choice;
mod histogram;
mod rps;

pub use choice::{
    choice_step, enumerate_memoryless_value, memoryless_value, optimal_memoryless_value, Button,
    Choice, ChoiceConfig, ChoiceState,
};
pub use histogram::{interval_mass, Histogram};
pub use rps::{
    rps_iteration, rps_judge, train_rps, CounterConfig, GaussianPlayer, QuantilePlayer, RpsActionSpace,
    RpsGame, RpsIteration, RpsMove, RpsPlayer, TraineeConfig,
};
