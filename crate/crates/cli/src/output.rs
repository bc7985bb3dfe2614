//! On-disk formats: JSON reports, sweep CSVs and binary field dumps.
//!
//! Binary field dump (`.nlsb`), all little-endian:
//!
//! ```text
//! magic    4 bytes   "NLSB"
//! version  u32       1
//! n        u32       spatial dimension N
//! k        u32       number of components
//! points   u32 × N   nodes per axis
//! extent   f64 × N   half-width per axis (nodes span [-extent, extent])
//! spacing  f64 × N
//! data     f64 × k × Π points   component by component, each row-major (last axis fastest)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use cnls_core::model::{FieldVector, Grid};
use cnls_core::solver::SeparationCurve;

pub const NLSB_MAGIC: &[u8; 4] = b"NLSB";
pub const NLSB_VERSION: u32 = 1;

pub fn write_nlsb(path: &Path, u: &FieldVector) -> Result<()> {
    let g = &u.grid;
    let mut buf = Vec::with_capacity(32 + 8 * u.k() * g.len());
    buf.extend_from_slice(NLSB_MAGIC);
    buf.extend_from_slice(&NLSB_VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.n as u32).to_le_bytes());
    buf.extend_from_slice(&(u.k() as u32).to_le_bytes());
    for a in 0..g.n {
        buf.extend_from_slice(&(g.points[a] as u32).to_le_bytes());
    }
    for a in 0..g.n {
        buf.extend_from_slice(&g.extent[a].to_le_bytes());
    }
    for a in 0..g.n {
        buf.extend_from_slice(&g.spacing[a].to_le_bytes());
    }
    for c in &u.comps {
        for v in c {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn read_nlsb(path: &Path) -> Result<FieldVector> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .with_context(|| format!("reading {}", path.display()))?;
    let mut pos = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        if pos + len > bytes.len() {
            bail!("truncated field dump");
        }
        let s = &bytes[pos..pos + len];
        pos += len;
        Ok(s)
    };
    if take(4)? != NLSB_MAGIC {
        bail!("not a field dump (bad magic)");
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != NLSB_VERSION {
        bail!("unsupported field dump version {version}");
    }
    let n = u32_at(take(4)?) as usize;
    let k = u32_at(take(4)?) as usize;
    if !(1..=3).contains(&n) {
        bail!("field dump has N = {n}");
    }
    let points: Vec<usize> = (0..n).map(|_| take(4).map(|b| u32_at(b) as usize)).collect::<Result<_>>()?;
    let extent: Vec<f64> = (0..n).map(|_| take(8).map(f64_at)).collect::<Result<_>>()?;
    let spacing: Vec<f64> = (0..n).map(|_| take(8).map(f64_at)).collect::<Result<_>>()?;
    let grid = Grid::anisotropic(&extent, &spacing)?;
    if grid.points != points {
        bail!("field dump axis sizes {points:?} disagree with extent/spacing");
    }
    let len = grid.len();
    let mut comps = Vec::with_capacity(k);
    for _ in 0..k {
        comps.push((0..len).map(|_| take(8).map(f64_at)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(FieldVector::new(grid, comps)?)
}

/// One row per requested separation: r_requested, r, energy, limit, t_1..t_k, boundary_mass.
pub fn write_sweep_csv(path: &Path, curve: &SeparationCurve, k: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["r_requested".to_string(), "r".into(), "energy".into(), "limit".into()];
    header.extend((1..=k).map(|j| format!("t_{j}")));
    header.push("boundary_mass".into());
    w.write_record(&header)?;
    for i in 0..curve.r.len() {
        let mut row = vec![curve.r_requested[i].to_string(), curve.r[i].to_string()];
        row.push(curve.energy[i].map_or(String::new(), |e| e.to_string()));
        row.push(curve.limit.to_string());
        match &curve.multipliers[i] {
            Some(t) => row.extend(t.iter().map(|v| v.to_string())),
            None => row.extend((0..k).map(|_| String::new())),
        }
        row.push(curve.boundary_mass[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
