use crate::diffcore::Matrix;
use crate::{Error, Result};

/// An unordered set of `n ≥ 1` finite points in `R^d`, stored one point per row.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Matrix,
}

impl PointCloud {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.rows() == 0 {
            return Err(Error::Empty("point cloud has no points".into()));
        }
        if points.cols() == 0 {
            return Err(Error::Shape("point cloud has zero dimension".into()));
        }
        if !points.is_finite() {
            return Err(Error::NonFinite("point cloud coordinates".into()));
        }
        Ok(Self { points })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.row_iter()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn into_matrix(self) -> Matrix {
        self.points
    }

    /// Reorders points: row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len()
            || perm
                .iter()
                .any(|&p| p >= seen.len() || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        Ok(Self {
            points: self.points.select_rows(perm),
        })
    }

    /// First `n` points (clamped to the cloud size).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        Self::new(self.points.select_rows(&idx))
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.len()) {
            return Err(Error::InvalidArgument("subset index out of range".into()));
        }
        Self::new(self.points.select_rows(idx))
    }

    pub fn translated(&self, t: &[f64]) -> Result<Self> {
        if t.len() != self.dim() {
            return Err(Error::Shape(format!(
                "translation of length {} for {}-d cloud",
                t.len(),
                self.dim()
            )));
        }
        let mut m = self.points.clone();
        for r in 0..m.rows() {
            for (v, dt) in m.row_mut(r).iter_mut().zip(t) {
                *v += dt;
            }
        }
        Self::new(m)
    }

    /// Per-axis centroid.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = self.points.column_sums().into_vec();
        for v in &mut c {
            *v /= self.len() as f64;
        }
        c
    }
}

/// Object descriptor ψ produced by the encoder and consumed by the point generator.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode(Vec<f64>);

impl LatentCode {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("latent code".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent code".into()));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_row(&self) -> Matrix {
        Matrix::row_vector(&self.0)
    }

    pub fn distance(&self, other: &LatentCode) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_enforced() {
        assert!(PointCloud::new(Matrix::zeros(0, 2)).is_err());
        assert!(PointCloud::from_rows(&[[f64::NAN, 0.0]]).is_err());
        let c = PointCloud::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        assert!(c.permuted(&[0, 0]).is_err());
        assert_eq!(c.permuted(&[1, 0]).unwrap().point(0), &[2.0, 3.0]);
        assert_eq!(c.centroid(), vec![1.0, 2.0]);
        assert!(LatentCode::new(vec![]).is_err());
    }
}
