//! Point-cloud files and dataset manifests.
//!
//! Text clouds hold one point per line, coordinates separated by whitespace; blank lines and
//! `#` comments are skipped. Binary clouds start with the 8-byte magic `PCGANPC1`, then the
//! point count and dimension as little-endian `u64`, then row-major little-endian `f64`.
//!
//! A manifest is a JSON array of entries whose paths are relative to the manifest's directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffcore::Matrix;
use crate::nets::PointCloud;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"PCGANPC1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Source mesh, for surface metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
}

/// Clouds loaded from a manifest, with entry paths resolved.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub clouds: Vec<PointCloud>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }

    pub fn mesh_path(&self, i: usize) -> Option<PathBuf> {
        self.entries[i].mesh.as_ref().map(|m| self.root.join(m))
    }
}

pub fn write_cloud_text(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = String::with_capacity(cloud.len() * cloud.dim() * 20);
    for p in cloud.iter() {
        let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_cloud_binary(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 8 * cloud.len() * cloud.dim());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(cloud.dim() as u64).to_le_bytes());
    for v in cloud.points().as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads either format, detected by the magic bytes.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        parse_binary(&bytes, path)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "neither UTF-8 text nor a binary cloud".into(),
        })?;
        parse_text(&text, path)
    }
}

fn parse_binary(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    let word = |i: usize| -> Result<u64> {
        let s = bytes
            .get(8 + 8 * i..16 + 8 * i)
            .ok_or_else(|| bad("truncated header".into()))?;
        Ok(u64::from_le_bytes(s.try_into().expect("8 bytes")))
    };
    let (n, d) = (word(0)? as usize, word(1)? as usize);
    let body = &bytes[24..];
    let expected = n.checked_mul(d).and_then(|k| k.checked_mul(8));
    if expected != Some(body.len()) {
        return Err(bad(format!(
            "header says {n}×{d} values, body has {} bytes",
            body.len()
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::Empty(format!("{} holds no points", path.display())));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    PointCloud::new(Matrix::from_vec(n, d, data)?)
}

fn parse_text(text: &str, path: &Path) -> Result<PointCloud> {
    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let start = data.len();
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok.parse().map_err(|_| err(format!("not a number: {tok:?}")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite coordinate {tok:?}")));
            }
            data.push(v);
        }
        let k = data.len() - start;
        match dim {
            None => dim = Some(k),
            Some(d) if d != k => return Err(err(format!("expected {d} coordinates, found {k}"))),
            _ => {}
        }
        rows += 1;
    }
    let Some(d) = dim else {
        return Err(Error::Empty(format!("{} holds no points", path.display())));
    };
    PointCloud::new(Matrix::from_vec(rows, d, data)?)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let text = serde_json::to_string_pretty(entries)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a manifest and every cloud it lists. All clouds must share one dimension.
pub fn load_dataset(manifest: &Path) -> Result<Dataset> {
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(Error::Empty(format!("{} lists no clouds", manifest.display())));
    }
    let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let clouds = entries
        .iter()
        .map(|e| read_cloud(&root.join(&e.path)))
        .collect::<Result<Vec<_>>>()?;
    let dim = clouds[0].dim();
    if let Some((e, c)) = entries.iter().zip(&clouds).find(|(_, c)| c.dim() != dim) {
        return Err(Error::Shape(format!("{} is {}-d, dataset is {dim}-d", e.path, c.dim())));
    }
    Ok(Dataset { root, entries, clouds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud() -> PointCloud {
        PointCloud::from_rows(&[[0.1, -2.5, 1e-300], [3.0, std::f64::consts::PI, -7.25]]).unwrap()
    }

    #[test]
    fn text_and_binary_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (t, b) = (dir.path().join("a.txt"), dir.path().join("a.bin"));
        write_cloud_text(&t, &cloud()).unwrap();
        write_cloud_binary(&b, &cloud()).unwrap();
        assert_eq!(read_cloud(&t).unwrap(), cloud());
        assert_eq!(read_cloud(&b).unwrap(), cloud());
    }

    #[test]
    fn text_errors_name_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.txt");
        std::fs::write(&p, "# header\n1 2\n\n3 x\n").unwrap();
        assert!(matches!(read_cloud(&p), Err(Error::Parse { line: 4, .. })));
        std::fs::write(&p, "1 2\n3 4 5\n").unwrap();
        assert!(matches!(read_cloud(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "# nothing\n").unwrap();
        assert!(matches!(read_cloud(&p), Err(Error::Empty(_))));
        std::fs::write(&p, "1 nan\n").unwrap();
        assert!(read_cloud(&p).is_err());
        let mut trunc = MAGIC.to_vec();
        trunc.extend_from_slice(&2u64.to_le_bytes());
        trunc.extend_from_slice(&2u64.to_le_bytes());
        trunc.extend_from_slice(&1.0f64.to_le_bytes());
        std::fs::write(&p, trunc).unwrap();
        assert!(matches!(read_cloud(&p), Err(Error::Parse { .. })));
        assert!(matches!(read_cloud(&dir.path().join("missing")), Err(Error::Io { .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_cloud_text(&dir.path().join("c0.txt"), &cloud()).unwrap();
        let entries = vec![ManifestEntry {
            path: "c0.txt".into(),
            label: "circle".into(),
            center: Some(vec![1.0, 2.0]),
            radius: Some(3.0),
            mesh: None,
        }];
        let m = dir.path().join("manifest.json");
        write_manifest(&m, &entries).unwrap();
        assert_eq!(read_manifest(&m).unwrap(), entries);
        let ds = load_dataset(&m).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.clouds[0], cloud());
        write_manifest(&m, &[]).unwrap();
        assert!(matches!(load_dataset(&m), Err(Error::Empty(_))));
    }
}
