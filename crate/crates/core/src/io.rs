//! Plain-file artifacts: radial profiles as CSV, 3D fields as raw binary.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field3::{CartGrid3, Field3};
use crate::radial::RadialProfile;

/// Writes `rho,value` rows.
pub fn write_profile_csv<W: Write>(profile: &RadialProfile<f64>, mut out: W) -> Result<()> {
    writeln!(out, "rho,value")?;
    for (rho, v) in profile.grid().nodes().into_iter().zip(profile.values()) {
        writeln!(out, "{rho:e},{v:e}")?;
    }
    Ok(())
}

/// Layout: `m` as little-endian u64, the half-width as little-endian f64,
/// then `m³` interleaved `(re, im)` little-endian f64 pairs in index order.
pub fn write_field<W: Write>(field: &Field3<f64>, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let grid = field.grid();
    out.write_all(&(grid.nodes_per_axis() as u64).to_le_bytes())?;
    out.write_all(&grid.half_width().to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<Field3<f64>> {
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let m = u64::from_le_bytes(b8);
    if !(16..=1024).contains(&m) {
        return Err(Error::Invalid(format!("field header has m = {m}")));
    }
    input.read_exact(&mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    let grid = CartGrid3::new(half_width, m as usize)?;
    let mut raw = vec![0u8; grid.len() * 16];
    input.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex::new(re, im)
        })
        .collect();
    Field3::new(grid, values)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
