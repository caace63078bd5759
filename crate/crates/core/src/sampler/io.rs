//! Sample files: headerless CSV (one row per sample) or raw little-endian `f64`.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};
use crate::linalg::Points;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFormat {
    #[default]
    Csv,
    Binary,
}

/// Writes one line per sample with shortest round-trip decimal formatting.
pub fn write_samples_csv<W: Write>(samples: &Points, mut w: W) -> std::io::Result<()> {
    let mut line = String::new();
    for row in samples.iter_rows() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

/// Writes the row-major coordinates as little-endian `f64`, no header.
pub fn write_samples_binary<W: Write>(samples: &Points, mut w: W) -> std::io::Result<()> {
    for v in samples.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_samples_csv<R: BufRead>(r: R, dim: usize) -> Result<Points> {
    let mut data = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| PsdError::invalid(format!("reading samples: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| PsdError::invalid(format!("line {}: bad number {field:?}: {e}", lineno + 1)))?;
            data.push(v);
        }
        if data.len() - before != dim {
            return Err(PsdError::invalid(format!(
                "line {}: expected {dim} columns, got {}",
                lineno + 1,
                data.len() - before
            )));
        }
    }
    Points::new(data.len() / dim, dim, data)
}

pub fn read_samples_binary<R: Read>(mut r: R, dim: usize) -> Result<Points> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| PsdError::invalid(format!("reading samples: {e}")))?;
    if bytes.len() % (8 * dim.max(1)) != 0 {
        return Err(PsdError::invalid(format!("{} bytes is not a whole number of {dim}-d samples", bytes.len())));
    }
    let data: Vec<f64> =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Points::new(data.len() / dim.max(1), dim, data)
}
