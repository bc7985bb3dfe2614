//! Test-function energies for two groups of components translated apart.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::math::{abs, round, sqrt};
use crate::model::{set_label, shift_axis0, ConstraintPartition, FieldVector, Norms, SystemSpec};
use crate::solver::projection::{multiplier_system, project_nehari};

/// A ground state of the subsystem on `components` (fields in subsystem order).
#[derive(Debug, Clone, PartialEq)]
pub struct SideState {
    pub components: Vec<usize>,
    pub field: FieldVector,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCurve {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub r_requested: Vec<f64>,
    /// Realized separations (multiples of twice the spacing).
    pub r: Vec<f64>,
    /// Projected energy per point; `None` where the projection was infeasible.
    pub energy: Vec<Option<f64>>,
    /// Per-component multipliers t_j(R).
    pub multipliers: Vec<Option<Vec<f64>>>,
    pub boundary_mass: Vec<f64>,
    /// Sum of the two side energies.
    pub limit: f64,
}

impl SeparationCurve {
    pub fn label(&self) -> String {
        let mut s = set_label(&self.left);
        s.push('|');
        s.push_str(&set_label(&self.right));
        s
    }

    /// (R, energy) at the lowest feasible point.
    pub fn min(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (r, e) in self.r.iter().zip(&self.energy) {
            if let Some(e) = e {
                if best.is_none_or(|b| *e < b.1) {
                    best = Some((*r, *e));
                }
            }
        }
        best
    }

    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.energy.iter().enumerate() {
            if let Some(e) = e {
                if best.is_none_or(|b| *e < b.1) {
                    best = Some((i, *e));
                }
            }
        }
        best.map(|b| b.0)
    }

    /// Whether the lowest point lies strictly below the limit and before the last feasible R.
    pub fn interior_minimum(&self) -> bool {
        let last = self.energy.iter().rposition(|e| e.is_some());
        match (self.argmin(), last, self.min()) {
            (Some(i), Some(l), Some((_, e))) => i < l && e < self.limit - 1e-12 * abs(self.limit).max(1.0),
            _ => false,
        }
    }

    /// Largest |energy - limit| over the last `count` feasible points.
    pub fn tail_gap(&self, count: usize) -> f64 {
        self.energy.iter().rev().flatten().take(count).map(|e| abs(e - self.limit)).fold(0.0, f64::max)
    }
}

/// Shift every component of `u` by the same number of cells so the total mass centre sits at 0.
pub fn center_field(u: &FieldVector) -> FieldVector {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..u.k() {
        let m = u.mass(j);
        num += m * u.centroid(j);
        den += m;
    }
    if den == 0.0 {
        return u.clone();
    }
    let cells = -round(num / den / u.grid.spacing[0]) as isize;
    let comps = u.comps.iter().map(|c| shift_axis0(&u.grid, c, cells)).collect();
    FieldVector { grid: u.grid.clone(), comps }
}

fn check_sides(spec: &SystemSpec, left: &SideState, right: &SideState) -> Result<()> {
    let mut seen = vec![false; spec.k];
    for &j in left.components.iter().chain(&right.components) {
        if j >= spec.k || seen[j] {
            return Err(Error::InvalidPartition("sides must be disjoint and within the system".into()));
        }
        seen[j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidPartition("sides must cover every component".into()));
    }
    if left.field.k() != left.components.len() || right.field.k() != right.components.len() {
        return Err(Error::DimensionMismatch("side field does not match its component list".into()));
    }
    if left.field.grid != right.field.grid {
        return Err(Error::DimensionMismatch("sides live on different grids".into()));
    }
    Ok(())
}

/// Left side centred at -R/2 and right side at +R/2, both rounded to whole cells.
/// Returns the composite and the realized R.
pub fn composite(spec: &SystemSpec, left: &SideState, right: &SideState, r: f64) -> Result<(FieldVector, f64)> {
    check_sides(spec, left, right)?;
    let grid = left.field.grid.clone();
    let h = grid.spacing[0];
    let half = round(r / (2.0 * h)) as isize;
    let lc = center_field(&left.field);
    let rc = center_field(&right.field);
    let mut comps = vec![Vec::new(); spec.k];
    for (a, &j) in left.components.iter().enumerate() {
        comps[j] = shift_axis0(&grid, &lc.comps[a], -half);
    }
    for (a, &j) in right.components.iter().enumerate() {
        comps[j] = shift_axis0(&grid, &rc.comps[a], half);
    }
    Ok((FieldVector { grid, comps }, 2.0 * half as f64 * h))
}

/// Energies of the projected composites over `r_grid` (singleton constraints).
pub fn sweep_separation(spec: &SystemSpec, left: &SideState, right: &SideState, r_grid: &[f64]) -> Result<SeparationCurve> {
    check_sides(spec, left, right)?;
    let part = ConstraintPartition::singletons(spec.k);
    let mut curve = SeparationCurve {
        left: left.components.clone(),
        right: right.components.clone(),
        r_requested: r_grid.to_vec(),
        r: Vec::with_capacity(r_grid.len()),
        energy: Vec::with_capacity(r_grid.len()),
        multipliers: Vec::with_capacity(r_grid.len()),
        boundary_mass: Vec::with_capacity(r_grid.len()),
        limit: left.energy + right.energy,
    };
    for &r in r_grid {
        let (u, real) = composite(spec, left, right, r)?;
        curve.r.push(real);
        curve.boundary_mass.push(u.boundary_mass());
        match project_nehari(spec, &u, &part) {
            Ok(p) => {
                curve.energy.push(Some(p.energy(spec)));
                curve.multipliers.push(Some(p.multipliers.t));
            }
            Err(Error::ProjectionInfeasible(_)) => {
                curve.energy.push(None);
                curve.multipliers.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// Splitting of the singleton multiplier system at a composite: A = A0 + E with E the terms
/// coupling the two sides.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierExpansion {
    pub a0: Vec<f64>,
    pub e: Vec<f64>,
    /// ‖A0⁻¹E‖_∞, the relative size of the cross-side overlaps.
    pub epsilon: f64,
    /// t from the full solve.
    pub dense: Vec<f64>,
    /// t from t² ≈ 1 - A0⁻¹E·1.
    pub first_order: Vec<f64>,
}

/// Multipliers of a composite whose sides each satisfy their own singleton constraints.
pub fn multiplier_expansion(spec: &SystemSpec, u: &FieldVector, left: &[usize]) -> Result<MultiplierExpansion> {
    let part = ConstraintPartition::singletons(spec.k);
    let norms = Norms::compute(spec, u)?;
    let (a, b) = multiplier_system(spec, &norms, &part);
    let k = spec.k;
    let side = |j: usize| left.contains(&j);
    let mut a0 = a.clone();
    let mut e = vec![0.0; k * k];
    for g in 0..k {
        for h in 0..k {
            if side(g) != side(h) {
                e[g * k + h] = a[g * k + h];
                a0[g * k + h] = 0.0;
            }
        }
    }
    let (t2, _) = lu_solve(&a, &b)?;
    let first = crate::solver::projection::first_order_multipliers(&a0, &e)?;
    // row-sum norm of A0⁻¹E
    let mut rows = vec![0.0; k];
    for g in 0..k {
        let col: Vec<f64> = (0..k).map(|h| e[h * k + g]).collect();
        let (x, _) = lu_solve(&a0, &col)?;
        for h in 0..k {
            rows[h] += abs(x[h]);
        }
    }
    let epsilon = rows.iter().cloned().fold(0.0, f64::max);
    Ok(MultiplierExpansion {
        a0,
        e,
        epsilon,
        dense: t2.iter().map(|v| sqrt(v.max(0.0))).collect(),
        first_order: first.iter().map(|v| sqrt(v.max(0.0))).collect(),
    })
}
