//! Field dumps: raw little-endian `f64` payload plus a JSON sidecar holding
//! the grid. `read_field ∘ write_field` is the identity bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use choquard_core::{make_grid, Field};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAYLOAD_FORMAT: &str = "f64-le";

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed sidecar {path}: {message}")]
    Sidecar { path: String, message: String },
    #[error("payload {path} holds {actual} bytes, sidecar grid needs {expected}")]
    LengthMismatch {
        path: String,
        expected: usize,
        actual: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dim: usize,
    pub half_length: f64,
    pub points_per_axis: usize,
    pub format: String,
    pub label: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FieldIoError + '_ {
    move |source| FieldIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_field(path: &Path, field: &Field, label: &str) -> Result<(), FieldIoError> {
    let g = field.grid();
    let bytes: Vec<u8> = field.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(io_err(path))?;
    let side = Sidecar {
        dim: g.dim(),
        half_length: g.half_length(),
        points_per_axis: g.points_per_axis(),
        format: PAYLOAD_FORMAT.to_string(),
        label: label.to_string(),
    };
    let sp = sidecar_path(path);
    let text = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    fs::write(&sp, text + "\n").map_err(io_err(&sp))
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, FieldIoError> {
    let sp = sidecar_path(path);
    let text = fs::read_to_string(&sp).map_err(io_err(&sp))?;
    serde_json::from_str(&text).map_err(|e| FieldIoError::Sidecar {
        path: sp.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_field(path: &Path) -> Result<(Field, Sidecar), FieldIoError> {
    let side = read_sidecar(path)?;
    let malformed = |message: String| FieldIoError::Sidecar {
        path: sidecar_path(path).display().to_string(),
        message,
    };
    if side.format != PAYLOAD_FORMAT {
        return Err(malformed(format!("unsupported payload format {:?}", side.format)));
    }
    let grid =
        make_grid(side.dim, side.half_length, side.points_per_axis).map_err(|e| malformed(e.to_string()))?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    let expected = 8 * grid.len();
    if bytes.len() != expected {
        return Err(FieldIoError::LengthMismatch {
            path: path.display().to_string(),
            expected,
            actual: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = Field::new(grid, values).map_err(|e| malformed(e.to_string()))?;
    Ok((field, side))
}
