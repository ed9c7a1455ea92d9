//! Loss log: one CSV row per step with columns
//! `step,w_upper,w_lower,sandwich,critic_objective,k`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

pub const LOG_HEADER: &str = "step,w_upper,w_lower,sandwich,critic_objective,k";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub w_upper: f64,
    pub w_lower: f64,
    pub sandwich: f64,
    pub critic_objective: f64,
    pub k: f64,
}

impl LogRow {
    pub fn is_finite(&self) -> bool {
        [self.w_upper, self.w_lower, self.sandwich, self.critic_objective, self.k]
            .iter()
            .all(|v| v.is_finite())
    }

    fn to_csv(self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.w_upper, self.w_lower, self.sandwich, self.critic_objective, self.k
        )
    }
}

/// Writes the full log, replacing any previous file.
pub fn write_log(path: &Path, rows: &[LogRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(f, "{LOG_HEADER}").map_err(|e| Error::io(path, e))?;
    for r in rows {
        writeln!(f, "{}", r.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

/// Reads a numeric CSV with a header row into column names and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Empty(format!("{} is empty", path.display())))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, l) in lines {
        let row: Vec<f64> = l
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("non-numeric field in {l:?}"),
            })?;
        if row.len() != names.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected {} fields, found {}", names.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/log.csv");
        let rows = vec![
            LogRow {
                step: 0,
                w_upper: 1.5,
                w_lower: 0.1,
                sandwich: 1.4,
                critic_objective: -0.2,
                k: 3375.0,
            },
            LogRow {
                step: 1,
                w_upper: 0.1 + 0.2,
                w_lower: 1e-300,
                sandwich: 0.0,
                critic_objective: 0.0,
                k: 1.0,
            },
        ];
        write_log(&p, &rows).unwrap();
        let (names, back) = read_csv(&p).unwrap();
        assert_eq!(names.join(","), LOG_HEADER);
        assert_eq!(back[1], vec![1.0, 0.1 + 0.2, 1e-300, 0.0, 0.0, 1.0]);
        std::fs::write(&p, "a,b\n1,x\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Parse { line: 2, .. })));
    }
}
