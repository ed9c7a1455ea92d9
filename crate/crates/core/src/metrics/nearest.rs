//! Nearest-face queries and the D2F / coverage metrics built on them.
//!
//! Small meshes are searched exhaustively; larger ones use a median-split AABB tree.
//! Both report the lowest face index among equidistant faces, so results do not depend
//! on the search structure or on how points are spread across threads.

use rayon::prelude::*;

use super::mesh::Mesh;
use super::triangle::{distance_unchecked, Vec3};
use crate::diffcore::pairwise_sum;
use crate::nets::PointCloud;
use crate::{Error, Result};

pub const BRUTE_FORCE_MAX_FACES: usize = 20_000;
const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
struct Node {
    min: Vec3,
    max: Vec3,
    /// Leaf: range into `order`. Inner: child node indices.
    kind: NodeKind,
}

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf(usize, usize),
    Inner(usize, usize),
}

/// Spatial index over the faces of a [`Mesh`].
#[derive(Clone, Debug)]
pub struct FaceIndex<'m> {
    mesh: &'m Mesh,
    tree: Option<(Vec<Node>, Vec<usize>)>,
}

impl<'m> FaceIndex<'m> {
    /// Brute force up to [`BRUTE_FORCE_MAX_FACES`] faces, AABB tree above.
    pub fn new(mesh: &'m Mesh) -> Self {
        if mesh.face_count() <= BRUTE_FORCE_MAX_FACES {
            Self::brute_force(mesh)
        } else {
            Self::tree(mesh)
        }
    }

    pub fn brute_force(mesh: &'m Mesh) -> Self {
        Self { mesh, tree: None }
    }

    pub fn tree(mesh: &'m Mesh) -> Self {
        let mut order: Vec<usize> = (0..mesh.face_count()).collect();
        let centroids: Vec<Vec3> = (0..mesh.face_count()).map(|f| mesh.barycenter(f)).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            build(mesh, &centroids, &mut order, 0, mesh.face_count(), &mut nodes);
        }
        Self {
            mesh,
            tree: Some((nodes, order)),
        }
    }

    pub fn uses_tree(&self) -> bool {
        self.tree.is_some()
    }

    /// `(face, distance)` of the nearest face.
    pub fn nearest(&self, p: Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let consider = |f: usize, best: &mut (usize, f64)| {
            let d = distance_unchecked(p, &self.mesh.triangle(f));
            if d < best.1 || (d == best.1 && f < best.0) {
                *best = (f, d);
            }
        };
        match &self.tree {
            None => {
                for f in 0..self.mesh.face_count() {
                    consider(f, &mut best);
                }
            }
            Some((nodes, order)) => {
                if nodes.is_empty() {
                    return best;
                }
                let mut stack = vec![0usize];
                while let Some(n) = stack.pop() {
                    let node = &nodes[n];
                    if box_distance(p, node) > best.1 {
                        continue;
                    }
                    match node.kind {
                        NodeKind::Leaf(s, e) => {
                            for &f in &order[s..e] {
                                consider(f, &mut best);
                            }
                        }
                        NodeKind::Inner(l, r) => {
                            let (dl, dr) = (box_distance(p, &nodes[l]), box_distance(p, &nodes[r]));
                            if dl <= dr {
                                stack.push(r);
                                stack.push(l);
                            } else {
                                stack.push(l);
                                stack.push(r);
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

fn box_distance(p: Vec3, n: &Node) -> f64 {
    let mut s = 0.0;
    for d in 0..3 {
        let e = (n.min[d] - p[d]).max(0.0).max(p[d] - n.max[d]);
        s += e * e;
    }
    s.sqrt()
}

fn build(
    mesh: &Mesh,
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    let mut cmin = [f64::INFINITY; 3];
    let mut cmax = [f64::NEG_INFINITY; 3];
    for &f in &order[start..end] {
        for v in mesh.triangle(f) {
            for d in 0..3 {
                min[d] = min[d].min(v[d]);
                max[d] = max[d].max(v[d]);
            }
        }
        for d in 0..3 {
            cmin[d] = cmin[d].min(centroids[f][d]);
            cmax[d] = cmax[d].max(centroids[f][d]);
        }
    }
    let id = nodes.len();
    nodes.push(Node {
        min,
        max,
        kind: NodeKind::Leaf(start, end),
    });
    if end - start > LEAF_SIZE {
        let axis = (0..3)
            .max_by(|&a, &b| (cmax[a] - cmin[a]).total_cmp(&(cmax[b] - cmin[b])))
            .unwrap_or(0);
        let slice = &mut order[start..end];
        slice.sort_by(|&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b)));
        let mid = start + (end - start) / 2;
        let l = build(mesh, centroids, order, start, mid, nodes);
        let r = build(mesh, centroids, order, mid, end, nodes);
        nodes[id].kind = NodeKind::Inner(l, r);
    }
    id
}

fn check_inputs(cloud: &PointCloud, mesh: &Mesh) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::Empty("mesh has no faces".into()));
    }
    if cloud.dim() != 3 {
        return Err(Error::Shape(format!(
            "mesh metrics need 3-d points, got {}-d",
            cloud.dim()
        )));
    }
    Ok(())
}

fn nearest_all(cloud: &PointCloud, index: &FaceIndex<'_>) -> Vec<(usize, f64)> {
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            index.nearest([p[0], p[1], p[2]])
        })
        .collect()
}

/// Mean over points of the distance to the nearest face.
pub fn d2f(cloud: &PointCloud, mesh: &Mesh) -> Result<f64> {
    check_inputs(cloud, mesh)?;
    let index = FaceIndex::new(mesh);
    let d: Vec<f64> = nearest_all(cloud, &index).into_iter().map(|(_, d)| d).collect();
    Ok(pairwise_sum(&d) / d.len() as f64)
}

/// Fraction of faces that are the nearest face of at least one point within `threshold`
/// (`None` counts every point).
pub fn coverage(cloud: &PointCloud, mesh: &Mesh, threshold: Option<f64>) -> Result<f64> {
    check_inputs(cloud, mesh)?;
    if let Some(t) = threshold {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coverage threshold must be positive, got {t}"
            )));
        }
    }
    let index = FaceIndex::new(mesh);
    let mut covered = vec![false; mesh.face_count()];
    for (f, d) in nearest_all(cloud, &index) {
        if threshold.is_none_or(|t| d <= t) {
            covered[f] = true;
        }
    }
    Ok(covered.iter().filter(|&&c| c).count() as f64 / mesh.face_count() as f64)
}
