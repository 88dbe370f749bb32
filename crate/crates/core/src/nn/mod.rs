//! GIN regressor, hand-written gradients and the training loop.

pub mod kernels;
mod model;
mod train;

pub use model::*;
pub use train::*;
