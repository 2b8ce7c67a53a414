//! A self-contained CNN: tensors, layer math with hand-written backward
//! passes, softmax cross-entropy, Adam, a deterministic training loop, and
//! checkpointing. No autodiff; every gradient is verified against finite
//! differences in the test suites.

mod adam;
mod layers;
mod loss;
mod model;
mod tensor;
mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use layers::{
    conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool_backward, maxpool_forward,
    relu_backward, relu_forward, softmax,
};
pub use loss::softmax_ce;
pub use model::{
    build_cnn_for_input, build_paper_cnn, Cache, CnnModel, LayerSpec, ParamGrad, CHECKPOINT_MAGIC,
};
pub use tensor::{Scalar, Tensor4};
pub use train::{
    evaluate, images_to_tensor, predict, train, EpochStats, Prediction, TrainConfig, TrainHistory,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("bad checkpoint: {reason}")]
    BadCheckpoint { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
