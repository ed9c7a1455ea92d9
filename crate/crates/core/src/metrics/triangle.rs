//! Exact closest point on a closed triangle, by Voronoi region of the query point.

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn axpy(a: Vec3, t: f64, d: Vec3) -> Vec3 {
    [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Twice the triangle area.
pub(crate) fn double_area(t: &[Vec3; 3]) -> f64 {
    norm(cross(sub(t[1], t[0]), sub(t[2], t[0])))
}

/// Closest point without a degeneracy check.
pub(crate) fn closest_point_unchecked(p: Vec3, [a, b, c]: &[Vec3; 3]) -> Vec3 {
    let ab = sub(*b, *a);
    let ac = sub(*c, *a);
    let ap = sub(p, *a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = sub(p, *b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return axpy(*a, d1 / (d1 - d3), ab);
    }
    let cp = sub(p, *c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return axpy(*a, d2 / (d2 - d6), ac);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return axpy(*b, (d4 - d3) / ((d4 - d3) + (d5 - d6)), sub(*c, *b));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    axpy(axpy(*a, v, ab), w, ac)
}

pub(crate) fn distance_unchecked(p: Vec3, t: &[Vec3; 3]) -> f64 {
    norm(sub(p, closest_point_unchecked(p, t)))
}

fn check(t: &[Vec3; 3]) -> Result<()> {
    if t.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("triangle vertex".into()));
    }
    if !(double_area(t) > 0.0) {
        return Err(Error::Degenerate(format!("triangle {t:?} has zero area")));
    }
    Ok(())
}

pub fn closest_point_on_triangle(p: Vec3, t: &[Vec3; 3]) -> Result<Vec3> {
    check(t)?;
    Ok(closest_point_unchecked(p, t))
}

/// Euclidean distance from `p` to the closed triangle `t`.
pub fn point_to_triangle(p: Vec3, t: &[Vec3; 3]) -> Result<f64> {
    check(t)?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query point".into()));
    }
    Ok(distance_unchecked(p, t))
}
