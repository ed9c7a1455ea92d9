//! Normalization and rotation augmentation.

use serde::{Deserialize, Serialize};

use crate::nets::{Normalization, PointCloud};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub samples_per_mesh: usize,
    pub normalize: bool,
    /// Rotations about the z-axis, each in `[0, π)`.
    pub angles: Vec<f64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            samples_per_mesh: 10_000,
            normalize: true,
            angles: augmentation_angles(),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_mesh == 0 {
            return Err(Error::InvalidArgument("samples per mesh must be at least 1".into()));
        }
        if let Some(a) = self.angles.iter().find(|a| !(0.0..std::f64::consts::PI).contains(*a)) {
            return Err(Error::InvalidArgument(format!("augmentation angle {a} outside [0, π)")));
        }
        Ok(())
    }
}

/// `{0, π/8, …, 7π/8}`.
pub fn augmentation_angles() -> Vec<f64> {
    (0..8).map(|k| k as f64 * std::f64::consts::PI / 8.0).collect()
}

fn fit(clouds: &[PointCloud], dim: usize) -> Result<Normalization> {
    let points = || clouds.iter().flat_map(|c| c.iter());
    let mut n = 0usize;
    let mut mean = vec![0.0; dim];
    for p in points() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "normalization needs at least 2 points, got {n}"
        )));
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let ss: f64 = points()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
        .sum();
    let scale = (ss / (n * dim) as f64).sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Degenerate("all points coincide; variance is zero".into()));
    }
    Ok(Normalization { offset: mean, scale })
}

/// Zero mean per axis, unit variance over all coordinates. Returns the normalized cloud and
/// the transform, whose [`Normalization::invert`] restores the input.
pub fn normalize(cloud: &PointCloud) -> Result<(PointCloud, Normalization)> {
    let norm = fit(std::slice::from_ref(cloud), cloud.dim())?;
    Ok((norm.apply(cloud)?, norm))
}

/// One transform fitted to the union of all points in `clouds`.
pub fn dataset_normalization(clouds: &[PointCloud]) -> Result<Normalization> {
    let first = clouds
        .first()
        .ok_or_else(|| Error::Empty("dataset has no clouds".into()))?;
    let dim = first.dim();
    if let Some(c) = clouds.iter().find(|c| c.dim() != dim) {
        return Err(Error::Shape(format!("mixed dimensions {dim} and {}", c.dim())));
    }
    fit(clouds, dim)
}

/// Rotation by `angle` about the z-axis.
pub fn rotate_xy(cloud: &PointCloud, angle: f64) -> Result<PointCloud> {
    if cloud.dim() != 3 {
        return Err(Error::Shape(format!(
            "rotation augmentation needs 3-d points, got {}-d",
            cloud.dim()
        )));
    }
    let (s, c) = angle.sin_cos();
    let mut m = cloud.points().clone();
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let (x, y) = (row[0], row[1]);
        row[0] = c * x - s * y;
        row[1] = s * x + c * y;
    }
    PointCloud::new(m)
}
