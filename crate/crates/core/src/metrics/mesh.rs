use super::triangle::{double_area, Vec3};
use crate::{Error, Result};

/// Triangle mesh with validated indices and positive-area faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    areas: Vec<f64>,
    dropped: usize,
}

impl Mesh {
    /// Builds a mesh from triangles. Zero-area faces are dropped and counted; out-of-range
    /// indices are an error.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mesh vertex".into()));
        }
        let mut kept = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        let mut dropped = 0;
        for (k, f) in faces.into_iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "face {k} references vertex {bad}, mesh has {}",
                    vertices.len()
                )));
            }
            let area = 0.5 * double_area(&[vertices[f[0]], vertices[f[1]], vertices[f[2]]]);
            if area > 0.0 {
                kept.push(f);
                areas.push(area);
            } else {
                dropped += 1;
            }
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} zero-area faces");
        }
        Ok(Self {
            vertices,
            faces: kept,
            areas,
            dropped,
        })
    }

    /// Fan-triangulates polygons (`[v0, v1, v2, v3]` becomes `[v0, v1, v2]`, `[v0, v2, v3]`).
    pub fn from_polygons(vertices: Vec<Vec3>, polygons: &[Vec<usize>]) -> Result<Self> {
        let mut faces = Vec::new();
        for (k, p) in polygons.iter().enumerate() {
            if p.len() < 3 {
                return Err(Error::InvalidArgument(format!("polygon {k} has {} vertices", p.len())));
            }
            for i in 1..p.len() - 1 {
                faces.push([p[0], p[i], p[i + 1]]);
            }
        }
        Self::new(vertices, faces)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        crate::diffcore::pairwise_sum(&self.areas)
    }

    /// Number of zero-area faces removed at construction.
    pub fn dropped_faces(&self) -> usize {
        self.dropped
    }

    pub fn barycenter(&self, f: usize) -> Vec3 {
        let t = self.triangle(f);
        std::array::from_fn(|d| (t[0][d] + t[1][d] + t[2][d]) / 3.0)
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&v| f(v)).collect(), self.faces.clone())
    }
}
