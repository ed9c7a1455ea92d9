//! Evaluation metrics: distance to face, coverage, circle fits and KS statistics.

pub mod circle;
pub mod ks;
pub mod mesh;
pub mod nearest;
pub mod triangle;

pub use circle::{fit_circle, quadrant_shares, CircleFit};
pub use ks::{ks_statistic, uniform_cdf};
pub use mesh::Mesh;
pub use nearest::{coverage, d2f, FaceIndex, BRUTE_FORCE_MAX_FACES};
pub use triangle::{closest_point_on_triangle, point_to_triangle, Vec3};
