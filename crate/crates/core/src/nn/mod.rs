//! From-scratch fully connected regression network.
//!
//! Hidden layers use softplus so predictions stay smooth in temperature and
//! composition (the density surface this crate models has no kinks); the
//! output layer is a single identity neuron. Training is plain mini-batch
//! backpropagation with Adam-style adaptive moments, an L2 weight penalty,
//! early stopping on a held-out validation slice, and per-layer freeze flags
//! that the transfer workflow relies on. Everything is single-threaded and
//! bit-for-bit deterministic per seed.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint};
pub(crate) use model::fresh_layer;
pub use model::{init_mlp, Activation, Layer, MlpModel};
pub use train::{gradient_check, search_hidden_width, train, TrainConfig, TrainReport};
