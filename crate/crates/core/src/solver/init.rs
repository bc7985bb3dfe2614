//! Starting configurations: decoupled scalar solitons placed at chosen centers.

use alloc::vec::Vec;

use crate::blocks::BlockDecomposition;
use crate::error::{Error, Result};
use crate::math::{abs, sqrt};
use crate::model::{FieldVector, Grid, SystemSpec};
use crate::scalar::solve_scalar_radial;

/// Component j is the scalar soliton for (λ_j, μ_j) centered at `centers[j]` (axis 0; the
/// other axes are centered at the origin).
pub fn soliton_field(spec: &SystemSpec, grid: &Grid, centers: &[f64]) -> Result<FieldVector> {
    if centers.len() != spec.k {
        return Err(Error::DimensionMismatch("one center per component".into()));
    }
    if grid.n != spec.n {
        return Err(Error::DimensionMismatch("grid dimension differs from N".into()));
    }
    let h = grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let far = centers.iter().map(|c| abs(*c)).fold(0.0, f64::max);
    let mut r2 = 0.0;
    for a in 0..grid.n {
        let e = grid.extent[a] + far;
        r2 += e * e;
    }
    let r_max = sqrt(r2) + 2.0 * h;
    let mut comps = Vec::with_capacity(spec.k);
    for j in 0..spec.k {
        let s = solve_scalar_radial(spec.lambda[j], spec.mu[j], spec.n, r_max.max(40.0 / sqrt(spec.lambda[j])), h.min(0.01))?;
        let mut c = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let m = grid.unflatten(idx);
            let mut r2 = 0.0;
            for a in 0..grid.n {
                let x = grid.coord(a, m[a]) - if a == 0 { centers[j] } else { 0.0 };
                r2 += x * x;
            }
            c.push(s.profile.value_at(sqrt(r2)));
        }
        comps.push(c);
    }
    FieldVector::new(grid.clone(), comps)
}

/// Centers that co-locate each block of `dec` and space consecutive blocks `gap` apart,
/// symmetric about the origin.
pub fn block_centers(k: usize, dec: &BlockDecomposition, gap: f64) -> Vec<f64> {
    let d = dec.degree();
    let mut centers = alloc::vec![0.0; k];
    for s in 0..d {
        let c = (s as f64 - (d as f64 - 1.0) / 2.0) * gap;
        for &j in dec.block(s) {
            centers[j] = c;
        }
    }
    centers
}

/// Default gap between repelling blocks: 6 decay lengths of the slowest component.
pub fn default_block_gap(spec: &SystemSpec) -> f64 {
    6.0 / sqrt(spec.lambda_min())
}
