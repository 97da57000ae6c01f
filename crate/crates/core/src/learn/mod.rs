//! Neural Q-learning substrate: a fully connected network with manual
//! backpropagation, Adam, Huber loss, a uniform replay buffer and the
//! Double-DQL update.

mod adam;
mod dqn;
mod loss;
mod mlp;
mod replay;
mod snapshot;

pub use adam::Adam;
pub use dqn::{
    ddql_target, epsilon, sync_target, td_loss_and_grad, train_step, DqnConfig, DqnLearner,
    TrainScratch, DECAY_FRACTION,
};
pub use loss::{huber, huber_grad, huber_loss};
pub use mlp::{Mlp, Workspace};
pub use replay::{ReplayBuffer, StepRecord, Transition, TransitionBatch};
pub use snapshot::SNAPSHOT_VERSION;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("replay buffer has no usable transitions")]
    EmptyBuffer,
    #[error("frozen inference model cannot be trained")]
    Frozen,
    #[error("snapshot: {0}")]
    Snapshot(String),
}
