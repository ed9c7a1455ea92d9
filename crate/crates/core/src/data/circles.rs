//! 2D circles whose centers follow a four-component Gaussian mixture.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffcore::Matrix;
use crate::nets::PointCloud;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircleDatasetConfig {
    /// Number of clouds `M`.
    pub clouds: usize,
    /// Points per cloud `n`.
    pub points: usize,
    /// Mixture means are `{±offset} × {±offset}`.
    pub center_offset: f64,
    /// Per-axis variance of each mixture component.
    pub center_variance: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub seed: u64,
}

impl Default for CircleDatasetConfig {
    fn default() -> Self {
        Self {
            clouds: 1000,
            points: 100,
            center_offset: 16.0,
            center_variance: 16.0,
            radius_min: 1.6,
            radius_max: 6.4,
            seed: 0,
        }
    }
}

impl CircleDatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clouds == 0 {
            return Err(Error::InvalidArgument("circle dataset needs at least one cloud".into()));
        }
        if self.points < 3 {
            return Err(Error::InvalidArgument(format!(
                "circle clouds need at least 3 points, got {}",
                self.points
            )));
        }
        if !(self.radius_min > 0.0 && self.radius_max > self.radius_min && self.radius_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radius range [{}, {}] must be positive and increasing",
                self.radius_min, self.radius_max
            )));
        }
        if !(self.center_variance >= 0.0 && self.center_variance.is_finite() && self.center_offset.is_finite()) {
            return Err(Error::InvalidArgument(
                "center mixture parameters must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleTruth {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleDataset {
    pub clouds: Vec<PointCloud>,
    pub truth: Vec<CircleTruth>,
}

fn one_circle(config: &CircleDatasetConfig, index: usize) -> (PointCloud, CircleTruth) {
    let mut rng = crate::seeded_rng(config.seed.wrapping_add(index as u64));
    let k: usize = rng.random_range(0..4);
    let sx = if k & 1 == 0 { 1.0 } else { -1.0 };
    let sy = if k & 2 == 0 { 1.0 } else { -1.0 };
    let sd = config.center_variance.sqrt();
    let center = [
        sx * config.center_offset + sd * rng.sample::<f64, _>(StandardNormal),
        sy * config.center_offset + sd * rng.sample::<f64, _>(StandardNormal),
    ];
    let radius = rng.random_range(config.radius_min..=config.radius_max);
    let mut data = Vec::with_capacity(2 * config.points);
    for _ in 0..config.points {
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        data.push(center[0] + radius * t.cos());
        data.push(center[1] + radius * t.sin());
    }
    let cloud =
        PointCloud::new(Matrix::from_vec(config.points, 2, data).expect("sized")).expect("finite by construction");
    (cloud, CircleTruth { center, radius })
}

/// Generates `M` clouds; cloud `i` uses its own RNG seeded with `seed + i`.
pub fn gen_circles(config: &CircleDatasetConfig) -> Result<CircleDataset> {
    config.validate()?;
    let (clouds, truth) = (0..config.clouds)
        .into_par_iter()
        .map(|i| one_circle(config, i))
        .unzip();
    Ok(CircleDataset { clouds, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{fit_circle, quadrant_shares};

    #[test]
    fn truth_is_in_range_and_recovered_exactly() {
        let ds = gen_circles(&CircleDatasetConfig {
            clouds: 200,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        for (c, t) in ds.clouds.iter().zip(&ds.truth) {
            assert!((1.6..=6.4).contains(&t.radius));
            assert_eq!(c.len(), 100);
            let fit = fit_circle(c).unwrap();
            assert!((fit.radius - t.radius).abs() < 1e-9);
            assert!((fit.center[0] - t.center[0]).abs() < 1e-9);
            assert!((fit.center[1] - t.center[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn mixture_statistics() {
        let ds = gen_circles(&CircleDatasetConfig {
            clouds: 10_000,
            points: 3,
            seed: 11,
            ..Default::default()
        })
        .unwrap();
        let centers: Vec<[f64; 2]> = ds.truth.iter().map(|t| t.center).collect();
        let n = centers.len() as f64;
        let mx = centers.iter().map(|c| c[0]).sum::<f64>() / n;
        let my = centers.iter().map(|c| c[1]).sum::<f64>() / n;
        assert!(mx.abs() < 0.5 && my.abs() < 0.5, "mean ({mx}, {my})");
        for s in quadrant_shares(&centers) {
            assert!((s - 0.25).abs() < 0.02, "share {s}");
        }
    }

    #[test]
    fn seeds_are_per_cloud_and_thread_independent() {
        let cfg = CircleDatasetConfig {
            clouds: 50,
            seed: 100,
            ..Default::default()
        };
        let all = gen_circles(&cfg).unwrap();
        let shifted = gen_circles(&CircleDatasetConfig {
            seed: 110,
            clouds: 40,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(all.clouds[10..], shifted.clouds[..40]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(pool.install(|| gen_circles(&cfg).unwrap()), all);
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            CircleDatasetConfig {
                clouds: 0,
                ..Default::default()
            },
            CircleDatasetConfig {
                points: 2,
                ..Default::default()
            },
            CircleDatasetConfig {
                radius_min: 3.0,
                radius_max: 2.0,
                ..Default::default()
            },
            CircleDatasetConfig {
                radius_min: -1.0,
                ..Default::default()
            },
        ] {
            assert!(gen_circles(&cfg).is_err());
        }
    }
}
