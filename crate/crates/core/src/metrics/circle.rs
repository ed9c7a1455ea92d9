use crate::nets::PointCloud;
use crate::{Error, Result};

/// Least-squares circle: center, radius and RMS of the radial residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleFit {
    pub center: [f64; 2],
    pub radius: f64,
    pub residual_rms: f64,
}

/// Kåsa fit: minimizes `Σ (x² + y² + D x + E y + F)²` over `(D, E, F)` on centered data.
pub fn fit_circle(cloud: &PointCloud) -> Result<CircleFit> {
    if cloud.dim() != 2 {
        return Err(Error::Shape(format!(
            "circle fit needs 2-d points, got {}-d",
            cloud.dim()
        )));
    }
    let n = cloud.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "circle fit needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let (mx, my) = cloud
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p[0] / nf, b + p[1] / nf));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let (mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0);
    for p in cloud.iter() {
        let (x, y) = (p[0] - mx, p[1] - my);
        let z = x * x + y * y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxz += x * z;
        syz += y * z;
        sz += z;
    }
    // Centered sums make Σx = Σy = 0, so F decouples: F = -Σz / n.
    let det = sxx * syy - sxy * sxy;
    let scale = (sxx + syy).max(f64::MIN_POSITIVE);
    if !(det > 1e-12 * scale * scale) {
        return Err(Error::Degenerate("points are collinear or coincident".into()));
    }
    let d = (-sxz * syy + syz * sxy) / det;
    let e = (-syz * sxx + sxz * sxy) / det;
    let f = -sz / nf;
    let (cx, cy) = (-d / 2.0, -e / 2.0);
    let r2 = cx * cx + cy * cy - f;
    if !(r2 > 0.0) {
        return Err(Error::Degenerate("fitted radius is not positive".into()));
    }
    let radius = r2.sqrt();
    let center = [cx + mx, cy + my];
    let ss: f64 = cloud
        .iter()
        .map(|p| {
            let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius;
            r * r
        })
        .sum();
    Ok(CircleFit {
        center,
        radius,
        residual_rms: (ss / nf).sqrt(),
    })
}

/// Fraction of centers in each quadrant, ordered (+,+), (-,+), (-,-), (+,-).
/// Points on an axis go to the quadrant on the non-negative side.
pub fn quadrant_shares(centers: &[[f64; 2]]) -> [f64; 4] {
    let mut counts = [0usize; 4];
    for c in centers {
        let q = match (c[0] >= 0.0, c[1] >= 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        counts[q] += 1;
    }
    let n = centers.len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}
