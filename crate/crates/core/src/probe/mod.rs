//! The MLP probe: parameters, forward/backward passes, task heads and
//! minibatch training.

mod config;
mod heads;
mod inputs;
mod linalg;
mod network;
mod optim;
mod predict;
mod train;

pub use config::{MlpConfig, Optimizer, TrainConfig};
pub use heads::{loss_and_grad, sigmoid, softmax, Head, Targets};
pub use inputs::{InputLayout, Inputs};
pub use network::{ForwardCache, Layer, MlpParams};
pub use optim::OptimizerState;
pub use predict::{
    load_checkpoint, predict_char, predict_length, predict_set, predict_substring, save_checkpoint,
    Predictions, SUBSTRING_THRESHOLD,
};
pub use train::{train, ExampleSet, MatrixSet, TrainOutcome};
