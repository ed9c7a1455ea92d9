use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffcore::Matrix;
use crate::nets::PointCloud;
use crate::{Error, Result};

/// Ground metric on points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    L1,
    L2,
}

impl Metric {
    #[inline]
    pub fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::L1 => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            Metric::L2 => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }
}

pub fn cost(x: &[f64], y: &[f64], metric: Metric) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "cannot compare a {}-d point with a {}-d point",
            x.len(),
            y.len()
        )));
    }
    Ok(metric.eval(x, y))
}

/// `C[i][j] = cost(x_i, y_j)`.
pub fn cost_matrix(x: &PointCloud, y: &PointCloud, metric: Metric) -> Result<Matrix> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!(
            "point sets have dimensions {} and {}",
            x.dim(),
            y.dim()
        )));
    }
    let (n, m) = (x.len(), y.len());
    let mut data = vec![0.0; n * m];
    let fill = |(i, row): (usize, &mut [f64])| {
        let xi = x.point(i);
        for (j, c) in row.iter_mut().enumerate() {
            *c = metric.eval(xi, y.point(j));
        }
    };
    if n * m >= 1 << 16 {
        data.par_chunks_mut(m).enumerate().for_each(fill);
    } else {
        data.chunks_mut(m).enumerate().for_each(fill);
    }
    Matrix::from_vec(n, m, data)
}
