//! Exact O(n³) assignment with row and column potentials. Used as a test oracle.

use super::cost::{cost_matrix, Metric};
use super::Assignment;
use crate::diffcore::Matrix;
use crate::nets::PointCloud;
use crate::{Error, Result};

pub const MAX_HUNGARIAN: usize = 512;

/// Optimal permutation for a square cost matrix: row `i` goes to column `perm[i]`.
pub fn hungarian_matrix(c: &Matrix) -> Result<Vec<usize>> {
    let n = c.rows();
    if c.cols() != n {
        return Err(Error::Shape(format!("cost matrix is {}x{}", c.rows(), c.cols())));
    }
    if n > MAX_HUNGARIAN {
        return Err(Error::InvalidArgument(format!(
            "Hungarian oracle is capped at {MAX_HUNGARIAN} points, got {n}"
        )));
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("Hungarian cost matrix".into()));
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c.get(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    Ok(perm)
}

pub fn hungarian_assign(x: &PointCloud, y: &PointCloud, metric: Metric) -> Result<Assignment> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "assignment needs equal-size sets, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() > MAX_HUNGARIAN {
        return Err(Error::InvalidArgument(format!(
            "Hungarian oracle is capped at {MAX_HUNGARIAN} points, got {}",
            x.len()
        )));
    }
    let c = cost_matrix(x, y, metric)?;
    Assignment::new(hungarian_matrix(&c)?, &c)
}
