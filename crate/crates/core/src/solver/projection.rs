//! Nehari projection: scale each constraint group by t_g so every grouped constraint vanishes.
//!
//! With A[g][g'] = Σ_{j∈g, i∈g'} β_ij ∫u_i²u_j² and b_g = Σ_{j∈g} ‖u_j‖²_{λ_j}, the scaled
//! field satisfies the constraints iff A·(t²) = b.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::math::{abs, sqrt};
use crate::model::{ConstraintPartition, FieldVector, Norms, SystemSpec};

/// Multiplier system (A row-major g×g, b) for `partition`.
pub fn multiplier_system(spec: &SystemSpec, norms: &Norms, partition: &ConstraintPartition) -> (Vec<f64>, Vec<f64>) {
    let ng = partition.len();
    let mut a = vec![0.0; ng * ng];
    let mut b = vec![0.0; ng];
    for (g, members) in partition.groups.iter().enumerate() {
        for &j in members {
            b[g] += norms.lam[j];
            for (h, others) in partition.groups.iter().enumerate() {
                for &i in others {
                    a[g * ng + h] += spec.beta(i, j) * norms.q(i, j);
                }
            }
        }
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    /// One scale per group.
    pub t: Vec<f64>,
    /// 1-norm condition number of A.
    pub condition: f64,
}

/// Solve A t² = b. Fails with ProjectionInfeasible when A is singular or some t² ≤ 0.
pub fn solve_multipliers(spec: &SystemSpec, norms: &Norms, partition: &ConstraintPartition) -> Result<Multipliers> {
    for (g, members) in partition.groups.iter().enumerate() {
        if members.iter().all(|&j| norms.lam[j] == 0.0) {
            return Err(Error::ZeroGroup(g));
        }
    }
    let (a, b) = multiplier_system(spec, norms, partition);
    let (t2, condition) = match lu_solve(&a, &b) {
        Ok(x) => x,
        Err(_) => return Err(Error::ProjectionInfeasible("multiplier matrix is singular".into())),
    };
    if let Some(g) = t2.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::ProjectionInfeasible(format!("t² = {} for group {}", t2[g], g + 1)));
    }
    let ng = b.len();
    for g in 0..ng {
        let r: f64 = b[g] - (0..ng).map(|h| a[g * ng + h] * t2[h]).sum::<f64>();
        if abs(r) > 1e-10 * b[g] {
            return Err(Error::ProjectionInfeasible(format!("multiplier residual {r:e} (condition {condition:e})")));
        }
    }
    Ok(Multipliers { t: t2.iter().map(|&v| sqrt(v)).collect(), condition })
}

/// Norms of the field after scaling group g by t[g], without touching the field.
pub fn scaled_norms(norms: &Norms, partition: &ConstraintPartition, t: &[f64]) -> Norms {
    let k = norms.k;
    let mut per = vec![1.0; k];
    for (g, members) in partition.groups.iter().enumerate() {
        for &j in members {
            per[j] = t[g];
        }
    }
    let mut out = norms.clone();
    for j in 0..k {
        out.lam[j] *= per[j] * per[j];
        for i in 0..k {
            out.quart[i * k + j] *= per[i] * per[i] * per[j] * per[j];
        }
    }
    out
}

pub fn scale_groups(u: &FieldVector, partition: &ConstraintPartition, t: &[f64]) -> FieldVector {
    let mut out = u.clone();
    for (g, members) in partition.groups.iter().enumerate() {
        for &j in members {
            for v in out.comps[j].iter_mut() {
                *v *= t[g];
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub field: FieldVector,
    pub multipliers: Multipliers,
    /// Norms of the projected field.
    pub norms: Norms,
}

impl Projection {
    pub fn energy(&self, spec: &SystemSpec) -> f64 {
        self.norms.energy(spec)
    }
}

/// Scale `u` group-wise onto the constraint manifold of `partition`.
pub fn project_nehari(spec: &SystemSpec, u: &FieldVector, partition: &ConstraintPartition) -> Result<Projection> {
    if partition.groups.iter().flatten().any(|&j| j >= spec.k) || partition.groups.iter().map(|g| g.len()).sum::<usize>() != spec.k {
        return Err(Error::InvalidPartition("partition does not match the system".into()));
    }
    let norms = Norms::compute(spec, u)?;
    let m = solve_multipliers(spec, &norms, partition)?;
    let field = scale_groups(u, partition, &m.t);
    let norms = scaled_norms(&norms, partition, &m.t);
    Ok(Projection { field, multipliers: m, norms })
}

/// First-order multipliers when A = A0 + E with A0·1 = b: t² ≈ 1 - A0⁻¹ E 1.
pub fn first_order_multipliers(a0: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = (0..=a0.len()).find(|n| n * n == a0.len()).ok_or(Error::DimensionMismatch("multiplier matrix is not square".into()))?;
    let e1: Vec<f64> = (0..n).map(|g| (0..n).map(|h| e[g * n + h]).sum()).collect();
    let (x, _) = lu_solve(a0, &e1)?;
    Ok(x.iter().map(|v| 1.0 - v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_system, Grid, SystemParams};

    fn sech_field(grid: &Grid, amps: &[f64], centers: &[f64]) -> FieldVector {
        let xs = grid.axis_coords(0);
        let comps = amps
            .iter()
            .zip(centers)
            .map(|(&a, &c)| xs.iter().map(|&x| a * crate::math::sech(x - c)).collect())
            .collect();
        FieldVector::new(grid.clone(), comps).unwrap()
    }

    fn spec3() -> SystemSpec {
        build_system(&SystemParams {
            n: 1,
            k: 3,
            lambda: vec![1.0, 2.0, 2.5],
            mu: vec![1.0; 3],
            beta: vec![vec![0.05, 0.05], vec![-0.05]],
        })
        .unwrap()
    }

    #[test]
    fn projected_field_satisfies_constraints_and_is_idempotent() {
        let g = Grid::line(15.0, 0.05).unwrap();
        let s = spec3();
        let u = sech_field(&g, &[1.0, 0.7, 1.9], &[0.0, 0.5, -1.0]);
        for part in [ConstraintPartition::singletons(3), ConstraintPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap(), ConstraintPartition::single(3)] {
            let p = project_nehari(&s, &u, &part).unwrap();
            let res = crate::model::nehari_residuals(&s, &p.field, &part).unwrap();
            let scale: f64 = p.norms.lam.iter().sum();
            assert!(res.iter().all(|r| r.abs() < 1e-10 * scale), "{res:?}");
            let q = project_nehari(&s, &p.field, &part).unwrap();
            assert!(q.multipliers.t.iter().all(|t| (t - 1.0).abs() < 1e-10));
            let e = crate::model::energy(&s, &p.field).unwrap();
            assert!((e - 0.25 * scale).abs() < 1e-12 * e);
        }
    }

    #[test]
    fn decoupled_scaling_is_inverse_amplitude() {
        let g = Grid::line(20.0, 0.01).unwrap();
        let s = spec3().decoupled();
        // exact continuum soliton sampled on the grid is close to, not on, the discrete manifold
        let base = project_nehari(&s, &sech_field(&g, &[2f64.sqrt(); 3], &[0.0; 3]), &ConstraintPartition::singletons(3)).unwrap();
        let scaled = scale_groups(&base.field, &ConstraintPartition::singletons(3), &[3.0, 0.5, 1.5]);
        let p = project_nehari(&s, &scaled, &ConstraintPartition::singletons(3)).unwrap();
        for (t, c) in p.multipliers.t.iter().zip([3.0, 0.5, 1.5]) {
            assert!((t * c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_configuration_is_reported() {
        let g = Grid::line(10.0, 0.05).unwrap();
        let s = build_system(&SystemParams { n: 1, k: 2, lambda: vec![1.0, 1.0], mu: vec![1.0, 1.0], beta: vec![vec![-3.0]] }).unwrap();
        let u = sech_field(&g, &[1.0, 1.0], &[0.0, 0.0]);
        assert!(matches!(project_nehari(&s, &u, &ConstraintPartition::singletons(2)), Err(Error::ProjectionInfeasible(_))));
        let z = FieldVector::zeros(g, 2);
        assert!(matches!(project_nehari(&s, &z, &ConstraintPartition::singletons(2)), Err(Error::ZeroGroup(0))));
    }
}
