//! Density snapshots: a flat little-endian `f64` array of `|ψ|²` (row-major,
//! x fastest) with a plain-text sidecar header describing the grid.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::ComplexField;

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn header_text(field: &ComplexField, label: &str) -> String {
    let g = &field.grid;
    format!(
        "# density snapshot |psi|^2, float64 little-endian, row-major (x fastest)\n\
         label = {label}\nnx = {}\nny = {}\ndx = {:e}\ndy = {:e}\norigin_x = {:e}\norigin_y = {:e}\nnorm = {:e}\n",
        g.nx, g.ny, g.dx, g.dy, g.origin.x, g.origin.y, field.norm_sq()
    )
}

pub fn density_bytes(field: &ComplexField) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        bytes.extend_from_slice(&v.norm_sqr().to_le_bytes());
    }
    bytes
}

/// Writes `path` (binary) and `path.hdr` (text).
pub fn write_density(field: &ComplexField, path: &Path, label: &str) -> io::Result<()> {
    fs::write(path, density_bytes(field))?;
    let mut hdr = fs::File::create(sidecar_path(path))?;
    hdr.write_all(header_text(field, label).as_bytes())
}

pub fn read_density(path: &Path) -> io::Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "snapshot length is not a multiple of 8"));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}
