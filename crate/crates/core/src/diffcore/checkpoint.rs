//! Plain-text checkpoint format.
//!
//! ```text
//! pcgan-checkpoint 1
//! tensors <count>
//! tensor <name> <rows> <cols>
//! <row-major values, one matrix row per line, shortest round-trip exponent form>
//! ```
//!
//! Values are written with `{:e}`, which round-trips every finite `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::Matrix;
use super::param::ParamSet;
use crate::{Error, Result};

const MAGIC: &str = "pcgan-checkpoint";
const VERSION: u32 = 1;

pub fn encode(params: &ParamSet) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "tensors {}", params.len()).unwrap();
    for p in params.iter() {
        let (r, c) = p.shape();
        writeln!(out, "tensor {} {r} {c}", p.name()).unwrap();
        for row in p.value().row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    }
    out
}

pub fn decode(text: &str) -> Result<Vec<(String, Matrix)>> {
    let bad = |line: usize, msg: &str| Error::Checkpoint(format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (ln, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some(MAGIC) {
        return Err(bad(ln, "missing checkpoint magic"));
    }
    match h.next().and_then(|v| v.parse::<u32>().ok()) {
        Some(VERSION) => {}
        other => return Err(bad(ln, &format!("unsupported version {other:?}"))),
    }
    let (ln, count_line) = lines.next().ok_or_else(|| bad(2, "missing tensor count"))?;
    let count = count_line
        .strip_prefix("tensors ")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| bad(ln, "malformed tensor count"))?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, head) = lines.next().ok_or_else(|| bad(0, "truncated file"))?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "tensor" {
            return Err(bad(ln, "malformed tensor header"));
        }
        let rows: usize = parts[2].parse().map_err(|_| bad(ln, "bad row count"))?;
        let cols: usize = parts[3].parse().map_err(|_| bad(ln, "bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, row) = lines.next().ok_or_else(|| bad(ln, "truncated tensor"))?;
            let before = data.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| bad(ln, "bad value"))?;
                if !v.is_finite() {
                    return Err(bad(ln, "non-finite value"));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(bad(ln, "wrong number of values in row"));
            }
        }
        out.push((parts[1].to_string(), Matrix::from_vec(rows, cols, data)?));
    }
    Ok(out)
}

pub fn save(path: &Path, params: &ParamSet) -> Result<()> {
    std::fs::write(path, encode(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path, params: &mut ParamSet) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params.load_values(&decode(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::ParamTensor;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in prop::collection::vec(-1e300f64..1e300, 6), tiny in -1e-300f64..1e-300) {
            let mut ps = ParamSet::new();
            ps.push(ParamTensor::new("layer0.w", Matrix::from_vec(2, 3, vals).unwrap()).unwrap());
            ps.push(ParamTensor::new("layer0.b", Matrix::from_vec(1, 2, vec![tiny, -0.0]).unwrap()).unwrap());
            let decoded = decode(&encode(&ps)).unwrap();
            let mut back = ps.clone();
            back.load_values(&decoded).unwrap();
            for (a, b) in ps.iter().zip(back.iter()) {
                for (x, y) in a.value().as_slice().iter().zip(b.value().as_slice()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_on_load() {
        let mut ps = ParamSet::new();
        ps.push(ParamTensor::zeros("w", 2, 2));
        let mut other = ParamSet::new();
        other.push(ParamTensor::zeros("w", 3, 2));
        assert!(other.load_values(&decode(&encode(&ps)).unwrap()).is_err());
        assert!(decode("not a checkpoint").is_err());
    }
}
