//! Dense tensors, a reverse-mode tape, and the sampling and optimizer
//! primitives the network modules are built from.

pub mod gradcheck;
mod gumbel;
mod noise;
mod params;
mod rng;
mod tape;
mod tensor;

pub use gumbel::{gumbel_soft_sample, gumbel_softmax, gumbel_softmax_with_noise, one_hot_argmax};
pub use noise::Noise;
pub use params::{AdamState, Bound, ParamId, ParamStore};
pub use rng::Rng;
pub use tape::{row_normalize, softmax_rows, sym_laplacian, Activation, Gradients, Tape, Var};
pub use tensor::Tensor;
