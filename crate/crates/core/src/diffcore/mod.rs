//! Minimal reverse-mode differentiation for small dense set networks.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod matrix;
pub mod param;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use matrix::{exact_sum, pairwise_sum, Matrix};
pub use param::{Binding, ParamSet, ParamTensor};
pub use tape::{Activation, Gradients, NodeId, Tape};
