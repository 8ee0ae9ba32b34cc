//! Minimal differentiable engine for the fixed actor-critic architecture:
//! shaped tensors, the shared convolutional extractor with dense heads,
//! hand-written backprop, Adam, finite-difference validation, and binary
//! checkpoints.

mod adam;
mod checkpoint;
mod gradcheck;
mod net;
mod tensor;

pub use adam::{Adam, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{grad_check, sample_coords, GradCheckReport};
pub use net::{
    argmax, sample_categorical, Dense, Forward, Grads, HeadLayout, PolicyNet, EMBED_DIM, HIDDEN_DIM, OBS_DIM,
    ROW_FEATURES,
};
pub use tensor::{entropy, log_softmax, softmax, Tensor};
