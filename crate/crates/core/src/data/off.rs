//! OFF mesh reader: `OFF` header (counts may share its line), a counts line, vertices, then
//! polygon faces. `#` starts a comment; extra per-vertex or per-face fields are ignored.

use std::path::Path;

use crate::metrics::{Mesh, Vec3};
use crate::{Error, Result};

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text, path)
}

/// Writes a triangle mesh as OFF; coordinates round-trip exactly.
pub fn write_off(path: &Path, mesh: &Mesh) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = format!("OFF\n{} {} 0\n", mesh.vertices().len(), mesh.face_count());
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v[0], v[1], v[2]).expect("writing to a String");
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).expect("writing to a String");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn parse_off(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| err(ln, format!("expected OFF header, found {header:?}")))?
        .trim();
    let (count_ln, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| err(ln, "missing counts line".into()))?
    } else {
        (ln, rest)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(count_ln, format!("malformed counts {counts:?}")))?;
    if nums.len() < 2 {
        return Err(err(
            count_ln,
            format!("expected vertex and face counts, found {counts:?}"),
        ));
    }
    let (nv, nf) = (nums[0], nums[1]);

    let mut vertices: Vec<Vec3> = Vec::with_capacity(nv);
    for k in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(count_ln, format!("file ends after {k} of {nv} vertices")))?;
        let v: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, format!("malformed vertex {l:?}")))?;
        if v.len() < 3 || v.iter().any(|x| !x.is_finite()) {
            return Err(err(ln, format!("vertex needs three finite coordinates, found {l:?}")));
        }
        vertices.push([v[0], v[1], v[2]]);
    }
    let mut polygons = Vec::with_capacity(nf);
    for k in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(count_ln, format!("file ends after {k} of {nf} faces")))?;
        let mut toks = l.split_whitespace();
        let arity: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, format!("malformed face {l:?}")))?;
        if arity < 3 {
            return Err(err(ln, format!("face with {arity} vertices")));
        }
        let idx: Vec<usize> = toks
            .take(arity)
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, format!("malformed face {l:?}")))?;
        if idx.len() != arity {
            return Err(err(ln, format!("face lists {} of {arity} indices", idx.len())));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(err(ln, format!("face references vertex {bad}, file has {nv}")));
        }
        polygons.push(idx);
    }
    Mesh::from_polygons(vertices, &polygons)
}
