//! The encoder `Q`, point generator `G_x`, object generator `G_θ` and the clipped critic.

pub mod cloud;
pub mod critic;
pub mod encoder;
pub mod generator;
pub mod mlp;
pub mod model;

pub use cloud::{LatentCode, PointCloud};
pub use critic::{critic_score, Critic};
pub use encoder::{Encoder, EncoderConfig, Pool};
pub use generator::{hierarchical_sample, normal_matrix, ObjectGenerator, PointGenerator};
pub use mlp::Mlp;
pub use model::{Model, ModelConfig, Normalization};
