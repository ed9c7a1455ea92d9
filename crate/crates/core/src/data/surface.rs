use rand::Rng;

use crate::diffcore::Matrix;
use crate::metrics::Mesh;
use crate::nets::PointCloud;
use crate::{Error, Result};

/// `n` points uniform on the surface: faces chosen with probability proportional to area,
/// then `p = (1-√r₁) a + √r₁ (1-r₂) b + √r₁ r₂ c`.
pub fn sample_surface<R: Rng + ?Sized>(mesh: &Mesh, n: usize, rng: &mut R) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("requested zero surface samples".into()));
    }
    let total = mesh.total_area();
    if mesh.is_empty() || !(total > 0.0) {
        return Err(Error::Degenerate("mesh has no surface area".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.face_count());
    let mut acc = 0.0;
    for &a in mesh.areas() {
        acc += a;
        cumulative.push(acc);
    }
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let f = cumulative.partition_point(|&c| c <= u).min(mesh.face_count() - 1);
        let [a, b, c] = mesh.triangle(f);
        let s = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        for d in 0..3 {
            data.push(wa * a[d] + wb * b[d] + wc * c[d]);
        }
    }
    PointCloud::new(Matrix::from_vec(n, 3, data)?)
}
