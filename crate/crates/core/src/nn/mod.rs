//! Minimal neural-network library: dense, 1-D convolution, average pooling,
//! flatten and reshape layers with exact backpropagation, trained with Adam
//! on the NMSE loss.

pub mod arch;
pub mod checkpoint;
mod gemm;
mod layer;
mod model;
mod train;

pub use arch::{build_conv_net, build_los_net, build_mimo_net, build_siso_net};
pub use layer::{Activation, Layer, LayerKind, LayerSpec};
pub use model::{Gradients, Loss, LossKind, NetworkModel};
pub use train::{
    noisy_input, train, train_with_loss, EpochRecord, TrainConfig, TrainData, TrainOutcome,
};
