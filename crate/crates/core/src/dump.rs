//! Binary field dumps and small file helpers.
//!
//! A `GPF1` dump is a 32-byte header followed by `n²` little-endian `f64`
//! values in row-major order:
//!
//! ```text
//! offset  size  content
//!      0     4  b"GPF1"
//!      4     4  n            (u32 LE)
//!      8     8  box length L (f64 LE)
//!     16    16  zero
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::FieldError;
use crate::grid::{Field2D, Grid2D};

pub const MAGIC: &[u8; 4] = b"GPF1";
pub const HEADER_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a GPF1 dump: {0}")]
    Format(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub fn encode(u: &Field2D) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * u.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(u.grid.n as u32).to_le_bytes());
    out.extend_from_slice(&u.grid.box_length.to_le_bytes());
    out.extend_from_slice(&[0u8; 16]);
    for v in &u.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field2D, DumpError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(DumpError::Format("bad magic".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let grid = Grid2D::new(n, l)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(DumpError::Format(format!(
            "expected {} value bytes, found {}",
            8 * grid.len(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Field2D::new(grid, values)?)
}

pub fn write_field(path: &Path, u: &Field2D) -> io::Result<()> {
    write_atomic(path, &encode(u))
}

pub fn read_field(path: &Path) -> Result<Field2D, DumpError> {
    decode(&fs::read(path)?)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = temp_sibling(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

/// `x,u` along the row through `y = 0`.
pub fn slice_csv(u: &Field2D) -> String {
    let g = u.grid;
    let j = g.n / 2;
    let mut s = String::from("x,u\n");
    for i in 0..g.n {
        s.push_str(&format!("{},{}\n", g.coord(i), u.at(i, j)));
    }
    s
}
