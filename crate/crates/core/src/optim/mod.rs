//! ADAM, node dropout and the training loop.

mod adam;
mod dropout;
mod train;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use dropout::{node_dropout, node_dropout_scales};
pub use train::{
    evaluate, train, train_with_observer, Dataset, DropoutPlacement, EpochMetrics, EvalMetrics, LossReduction,
    Sample, TrainConfig,
};
