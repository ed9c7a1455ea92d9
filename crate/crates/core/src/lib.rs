//! Point-cloud generation with a sandwiched Wasserstein objective.
//!
//! The crate is organized bottom-up:
//!
//! - [`diffcore`]: a small reverse-mode differentiation tape, parameters, Adam and checkpoints.
//! - [`nets`]: the set encoder `Q`, the conditional point generator `G_x`, the object
//!   generator `G_θ` and the weight-clipped critic.
//! - [`ot`]: point-set assignment (auction with ε-scaling, exact Hungarian) giving the
//!   upper bound `W_U`.
//! - [`losses`]: the critic lower bound `W_L`, the sandwich mixture and the λ-window verifier.
//! - [`metrics`]: distance-to-face, coverage, circle fits and KS statistics.
//! - [`data`]: the synthetic circle benchmark, OFF meshes, surface sampling and file formats.
//! - [`trainer`]: the two-stage training pipeline and reconstruction evaluation.
//! - [`cli`]: the `pcgan` command-line surface.

pub mod cli;
pub mod data;
pub mod diffcore;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod nets;
pub mod ot;
pub mod trainer;

pub use error::{Error, Result};

/// Deterministic RNG used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate RNG from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
