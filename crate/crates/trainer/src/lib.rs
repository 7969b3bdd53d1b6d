//! Training for the navigation policy: sampled rollouts, the composite
//! objective, the optimizer, and the epoch schedule with early stopping.

mod loss;
mod optim;
mod rollout;
mod train;

pub use loss::loss;
pub use optim::Adam;
pub use rollout::{rollout, Rollout, RolloutBuffer, RolloutMode, StepRecord};
pub use train::{evaluate, evaluate_episodes, train, EpochRecord, TrainConfig, TrainOutput};
