//! Minimal neural-network stack for the trainable separators: tensors,
//! dilated 1-D convolution, a tape autodiff graph, Adam, the UNet and
//! WaveNet architectures, and the training loop.

pub mod adam;
pub mod conv;
pub mod graph;
pub mod model;
pub mod tensor;
pub mod train;
pub mod unet;
pub mod wavenet;
