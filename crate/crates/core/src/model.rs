//! System specification, grids, discretized fields, energy, gradient and constraint functionals.
//!
//! Discretization: second-order central differences for Δ with zero values one node
//! beyond each end of every axis, and the trapezoidal rule (which reduces to `h^N Σ`
//! because the boundary values vanish). Energy and gradient use the same stencil, so
//! directional derivatives of the discrete energy equal inner products with the gradient.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, round};

/// Raw parameter record, before validation.
///
/// `beta` is either a full k×k matrix (symmetric, or with a zero strict lower triangle)
/// or the strict upper triangle given as rows of lengths k-1, k-2, ..., 0.
/// Diagonal entries are ignored and replaced by `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub n: usize,
    pub k: usize,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
}

/// Validated coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n: usize,
    pub k: usize,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// Row-major k×k, symmetric, `beta[j][j] = mu[j]`.
    beta: Vec<f64>,
    /// Off-diagonal couplings were zeroed on purpose (diagnostic runs only).
    pub decoupled: bool,
}

pub fn build_system(p: &SystemParams) -> Result<SystemSpec> {
    let k = p.k;
    if !(1..=3).contains(&p.n) {
        return Err(Error::InvalidSpec(format!("N = {} not in {{1,2,3}}", p.n)));
    }
    if k < 1 {
        return Err(Error::InvalidSpec("k must be at least 1".into()));
    }
    if p.lambda.len() != k || p.mu.len() != k {
        return Err(Error::InvalidSpec(format!(
            "expected {k} values of lambda and mu, got {} and {}",
            p.lambda.len(),
            p.mu.len()
        )));
    }
    for (j, (&l, &m)) in p.lambda.iter().zip(&p.mu).enumerate() {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-positive lambda[{}] = {l}", j + 1)));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-positive mu[{}] = {m}", j + 1)));
        }
    }
    let mut beta = vec![0.0; k * k];
    let square = p.beta.len() == k && p.beta.iter().all(|r| r.len() == k);
    let upper = p.beta.len() == k.saturating_sub(1) && p.beta.iter().enumerate().all(|(i, r)| r.len() == k - 1 - i)
        || (p.beta.len() == k && p.beta.iter().enumerate().all(|(i, r)| r.len() == k - 1 - i));
    if square && k > 1 {
        let lower_zero = (0..k).all(|i| (0..i).all(|j| p.beta[i][j] == 0.0));
        for i in 0..k {
            for j in i + 1..k {
                let b = p.beta[i][j];
                if !lower_zero && p.beta[j][i] != b {
                    return Err(Error::InvalidSpec(format!(
                        "asymmetric beta: beta[{}][{}] = {} but beta[{}][{}] = {}",
                        i + 1,
                        j + 1,
                        b,
                        j + 1,
                        i + 1,
                        p.beta[j][i]
                    )));
                }
                beta[i * k + j] = b;
                beta[j * k + i] = b;
            }
        }
    } else if upper || k == 1 {
        for (i, row) in p.beta.iter().enumerate() {
            for (o, &b) in row.iter().enumerate() {
                let j = i + 1 + o;
                beta[i * k + j] = b;
                beta[j * k + i] = b;
            }
        }
    } else {
        return Err(Error::InvalidSpec("beta must be k×k or its strict upper triangle".into()));
    }
    for i in 0..k {
        for j in i + 1..k {
            let b = beta[i * k + j];
            if !b.is_finite() {
                return Err(Error::InvalidSpec(format!("beta[{}][{}] is not finite", i + 1, j + 1)));
            }
            if b == 0.0 {
                return Err(Error::InvalidSpec(format!("zero coupling beta[{}][{}]", i + 1, j + 1)));
            }
        }
        beta[i * k + i] = p.mu[i];
    }
    Ok(SystemSpec { n: p.n, k, lambda: p.lambda.clone(), mu: p.mu.clone(), beta, decoupled: false })
}

impl SystemSpec {
    #[inline]
    pub fn beta(&self, i: usize, j: usize) -> f64 {
        self.beta[i * self.k + j]
    }

    /// Row-major coupling matrix Θ with μ on the diagonal.
    pub fn theta(&self) -> &[f64] {
        &self.beta
    }

    /// The same system with every off-diagonal coupling set to zero.
    pub fn decoupled(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.k {
            for j in 0..self.k {
                if i != j {
                    s.beta[i * self.k + j] = 0.0;
                }
            }
        }
        s.decoupled = true;
        s
    }

    /// Restriction to the listed components, in the listed order.
    pub fn subsystem(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut beta = vec![0.0; m * m];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                beta[a * m + b] = self.beta(i, j);
            }
        }
        Self {
            n: self.n,
            k: m,
            lambda: idx.iter().map(|&i| self.lambda[i]).collect(),
            mu: idx.iter().map(|&i| self.mu[i]).collect(),
            beta,
            decoupled: self.decoupled,
        }
    }

    /// Component `perm[a]` of `self` becomes component `a` of the result.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.subsystem(perm)
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Whether Θ is positive definite (Cholesky succeeds).
    pub fn theta_positive_definite(&self) -> bool {
        let k = self.k;
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = self.beta(i, j);
                for m in 0..j {
                    s -= l[i * k + m] * l[j * k + m];
                }
                if i == j {
                    if s <= 0.0 {
                        return false;
                    }
                    l[i * k + i] = crate::math::sqrt(s);
                } else {
                    l[i * k + j] = s / l[j * k + j];
                }
            }
        }
        true
    }
}

/// Uniform axis-aligned grid on `[-L, L]^N` with `2L/h + 1` nodes per axis.
/// Fields vanish one node beyond each end (zero Dirichlet).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub extent: Vec<f64>,
    pub spacing: Vec<f64>,
    pub points: Vec<usize>,
}

impl Grid {
    pub fn new(n: usize, extent: f64, spacing: f64) -> Result<Self> {
        Self::anisotropic(&vec![extent; n], &vec![spacing; n])
    }

    pub fn line(extent: f64, spacing: f64) -> Result<Self> {
        Self::new(1, extent, spacing)
    }

    pub fn anisotropic(extent: &[f64], spacing: &[f64]) -> Result<Self> {
        let n = extent.len();
        if !(1..=3).contains(&n) || spacing.len() != n {
            return Err(Error::InvalidGrid(format!("dimension {n} not in 1..=3")));
        }
        let mut points = Vec::with_capacity(n);
        for a in 0..n {
            let (l, h) = (extent[a], spacing[a]);
            if !(l > 0.0 && h > 0.0 && l.is_finite() && h.is_finite()) {
                return Err(Error::InvalidGrid(format!("extent {l} and spacing {h} must be positive")));
            }
            let cells = 2.0 * l / h;
            let c = round(cells);
            if abs(cells - c) > 1e-8 * c.max(1.0) {
                return Err(Error::InvalidGrid(format!("2L/h = {cells} is not an integer")));
            }
            points.push(c as usize + 1);
        }
        Ok(Self { n, extent: extent.to_vec(), spacing: spacing.to_vec(), points })
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -self.extent[axis] + i as f64 * self.spacing[axis]
    }

    /// Row-major stride of `axis` (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    /// Multi-index of a flat index.
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.n).rev() {
            out[a] = idx % self.points[a];
            idx /= self.points[a];
        }
        out
    }

    /// Coordinates of the 1D grid (axis 0).
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|i| self.coord(axis, i)).collect()
    }
}

/// k real fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl FieldVector {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        for (j, c) in comps.iter().enumerate() {
            if c.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "component {} has {} values, grid has {n}",
                    j + 1,
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::DimensionMismatch(format!("component {} has non-finite values", j + 1)));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: Grid, k: usize) -> Self {
        let n = grid.len();
        Self { grid, comps: vec![vec![0.0; n]; k] }
    }

    pub fn k(&self) -> usize {
        self.comps.len()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Σ_j ⟨a_j, b_j⟩ over all components.
    pub fn dot(&self, other: &FieldVector) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| self.inner(a, b)).sum()
    }

    pub fn mass(&self, j: usize) -> f64 {
        self.inner(&self.comps[j], &self.comps[j])
    }

    /// Mass center of component j along axis 0.
    pub fn centroid(&self, j: usize) -> f64 {
        let s0 = self.grid.stride(0);
        let mut num = 0.0;
        let mut den = 0.0;
        for (idx, &v) in self.comps[j].iter().enumerate() {
            let x = self.grid.coord(0, (idx / s0) % self.grid.points[0]);
            num += x * v * v;
            den += v * v;
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Fraction of Σ‖u_j‖² located in the outer 10% shell of the box.
    pub fn boundary_mass(&self) -> f64 {
        let mut outer = 0.0;
        let mut total = 0.0;
        for c in &self.comps {
            for (idx, &v) in c.iter().enumerate() {
                let m = self.grid.unflatten(idx);
                let shell = (0..self.grid.n).any(|a| abs(self.grid.coord(a, m[a])) > 0.9 * self.grid.extent[a]);
                total += v * v;
                if shell {
                    outer += v * v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    /// Component j translated by `cells` nodes along axis 0 (values shifted out are dropped).
    pub fn shifted_component(&self, j: usize, cells: isize) -> Vec<f64> {
        shift_axis0(&self.grid, &self.comps[j], cells)
    }
}

pub(crate) fn shift_axis0(grid: &Grid, u: &[f64], cells: isize) -> Vec<f64> {
    let n0 = grid.points[0] as isize;
    let s0 = grid.stride(0);
    let mut out = vec![0.0; u.len()];
    for i in 0..n0 {
        let src = i - cells;
        if src < 0 || src >= n0 {
            continue;
        }
        let (a, b) = (i as usize * s0, src as usize * s0);
        out[a..a + s0].copy_from_slice(&u[b..b + s0]);
    }
    out
}

/// Disjoint groups of components covering 0..k; each group carries one constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintPartition {
    pub groups: Vec<Vec<usize>>,
}

impl ConstraintPartition {
    pub fn new(k: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; k];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidPartition("empty group".into()));
            }
            for &j in g {
                if j >= k {
                    return Err(Error::InvalidPartition(format!("index {} exceeds k = {k}", j + 1)));
                }
                if seen[j] {
                    return Err(Error::InvalidPartition(format!("component {} listed twice", j + 1)));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("component {} not covered", j + 1)));
        }
        Ok(Self { groups })
    }

    /// k singleton groups: the manifold of all positive critical points.
    pub fn singletons(k: usize) -> Self {
        Self { groups: (0..k).map(|j| vec![j]).collect() }
    }

    /// One group holding every component.
    pub fn single(k: usize) -> Self {
        Self { groups: vec![(0..k).collect()] }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_of(&self, j: usize) -> usize {
        self.groups.iter().position(|g| g.contains(&j)).expect("partition covers all components")
    }
}

fn check_dims(spec: &SystemSpec, u: &FieldVector) -> Result<()> {
    if u.k() != spec.k {
        return Err(Error::DimensionMismatch(format!("field has {} components, system has {}", u.k(), spec.k)));
    }
    if u.grid.n != spec.n {
        return Err(Error::DimensionMismatch(format!("grid dimension {} vs system N = {}", u.grid.n, spec.n)));
    }
    Ok(())
}

/// y = -Δ_h u (second-order stencil, zero ghost values).
pub fn neg_laplacian(grid: &Grid, u: &[f64], y: &mut [f64]) {
    for v in y.iter_mut() {
        *v = 0.0;
    }
    for a in 0..grid.n {
        let s = grid.stride(a);
        let na = grid.points[a];
        let ih2 = 1.0 / (grid.spacing[a] * grid.spacing[a]);
        for idx in 0..u.len() {
            let i = (idx / s) % na;
            let left = if i > 0 { u[idx - s] } else { 0.0 };
            let right = if i + 1 < na { u[idx + s] } else { 0.0 };
            y[idx] += (2.0 * u[idx] - left - right) * ih2;
        }
    }
}

/// Quadratic and quartic integrals that every functional is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Norms {
    /// ‖u_j‖²_{λ_j} = ∫|∇u_j|² + λ_j u_j².
    pub lam: Vec<f64>,
    /// ∫ u_i² u_j², row-major k×k.
    pub quart: Vec<f64>,
    pub k: usize,
}

impl Norms {
    pub fn compute(spec: &SystemSpec, u: &FieldVector) -> Result<Self> {
        check_dims(spec, u)?;
        let k = spec.k;
        let dv = u.grid.cell_volume();
        let mut tmp = vec![0.0; u.grid.len()];
        let mut lam = vec![0.0; k];
        for j in 0..k {
            neg_laplacian(&u.grid, &u.comps[j], &mut tmp);
            lam[j] = dv
                * u.comps[j].iter().zip(&tmp).map(|(&a, &la)| a * la + spec.lambda[j] * a * a).sum::<f64>();
        }
        let mut quart = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let q = dv
                    * u.comps[i].iter().zip(&u.comps[j]).map(|(&a, &b)| a * a * b * b).sum::<f64>();
                quart[i * k + j] = q;
                quart[j * k + i] = q;
            }
        }
        Ok(Self { lam, quart, k })
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.quart[i * self.k + j]
    }

    pub fn energy(&self, spec: &SystemSpec) -> f64 {
        let k = self.k;
        let mut e = 0.5 * self.lam.iter().sum::<f64>();
        for j in 0..k {
            e -= 0.25 * spec.mu[j] * self.q(j, j);
            for i in 0..j {
                e -= 0.5 * spec.beta(i, j) * self.q(i, j);
            }
        }
        e
    }

    /// 𝒢_j = ‖u_j‖²_λ - Σ_i β_ij ∫u_i²u_j² (β_jj = μ_j).
    pub fn g(&self, spec: &SystemSpec, j: usize) -> f64 {
        self.lam[j] - (0..self.k).map(|i| spec.beta(i, j) * self.q(i, j)).sum::<f64>()
    }
}

pub fn energy(spec: &SystemSpec, u: &FieldVector) -> Result<f64> {
    Ok(Norms::compute(spec, u)?.energy(spec))
}

/// L² gradient: component j is -Δu_j + λ_j u_j - μ_j u_j³ - Σ_{i≠j} β_ij u_i² u_j.
pub fn gradient(spec: &SystemSpec, u: &FieldVector) -> Result<FieldVector> {
    check_dims(spec, u)?;
    let k = spec.k;
    let n = u.grid.len();
    let mut out = vec![vec![0.0; n]; k];
    let mut dens = vec![0.0; n];
    for j in 0..k {
        let g = &mut out[j];
        neg_laplacian(&u.grid, &u.comps[j], g);
        for v in dens.iter_mut() {
            *v = 0.0;
        }
        for i in 0..k {
            let b = spec.beta(i, j);
            if b != 0.0 {
                for (d, &a) in dens.iter_mut().zip(&u.comps[i]) {
                    *d += b * a * a;
                }
            }
        }
        let l = spec.lambda[j];
        for ((gv, &a), &d) in g.iter_mut().zip(&u.comps[j]).zip(&dens) {
            *gv += l * a - d * a;
        }
    }
    Ok(FieldVector { grid: u.grid.clone(), comps: out })
}

/// Grouped constraint values Σ_{j∈g} 𝒢_j(u) for each group g.
pub fn nehari_residuals(spec: &SystemSpec, u: &FieldVector, partition: &ConstraintPartition) -> Result<Vec<f64>> {
    if partition.groups.iter().flatten().any(|&j| j >= spec.k) {
        return Err(Error::InvalidPartition("partition does not match the system".into()));
    }
    let norms = Norms::compute(spec, u)?;
    let mut out = Vec::with_capacity(partition.len());
    for (gi, g) in partition.groups.iter().enumerate() {
        if g.iter().all(|&j| u.comps[j].iter().all(|&v| v == 0.0)) {
            return Err(Error::ZeroGroup(gi));
        }
        out.push(g.iter().map(|&j| norms.g(spec, j)).sum());
    }
    Ok(out)
}

/// Human-readable 1-based rendering of an index set, e.g. `{1,2}`.
pub fn set_label(idx: &[usize]) -> String {
    let mut s = String::from("{");
    for (a, i) in idx.iter().enumerate() {
        if a > 0 {
            s.push(',');
        }
        s.push_str(&format!("{}", i + 1));
    }
    s.push('}');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sech;
    use proptest::prelude::*;

    fn params(k: usize, beta: Vec<Vec<f64>>) -> SystemParams {
        SystemParams { n: 1, k, lambda: vec![1.0; k], mu: vec![1.0; k], beta }
    }

    fn case_d() -> SystemSpec {
        build_system(&SystemParams {
            n: 1,
            k: 3,
            lambda: vec![1.0, 2.0, 2.5],
            mu: vec![1.0; 3],
            beta: vec![vec![0.05, 0.05], vec![-0.05]],
        })
        .unwrap()
    }

    fn soliton_field(grid: &Grid, centers: &[f64]) -> FieldVector {
        let xs = grid.axis_coords(0);
        let comps = centers
            .iter()
            .map(|&c| xs.iter().map(|&x| 2f64.sqrt() * sech(x - c)).collect())
            .collect();
        FieldVector::new(grid.clone(), comps).unwrap()
    }

    #[test]
    fn build_accepts_upper_triangle_and_square() {
        let s = case_d();
        assert_eq!(s.beta(0, 1), 0.05);
        assert_eq!(s.beta(2, 1), -0.05);
        assert_eq!(s.beta(1, 1), 1.0);
        let sq = build_system(&params(2, vec![vec![9.0, 0.3], vec![0.3, 9.0]])).unwrap();
        assert_eq!(sq.beta(0, 0), 1.0);
        assert_eq!(sq.beta(1, 0), 0.3);
        let upper_only = build_system(&params(2, vec![vec![1.0, 0.3], vec![0.0, 1.0]])).unwrap();
        assert_eq!(upper_only.beta(1, 0), 0.3);
    }

    #[test]
    fn build_rejects_bad_input() {
        let mut p = params(3, vec![vec![0.1, 0.1], vec![0.1]]);
        p.lambda = vec![0.0, 1.0, 1.0];
        assert!(matches!(build_system(&p), Err(Error::InvalidSpec(m)) if m.contains("lambda")));
        let p = params(3, vec![vec![0.1, 0.1], vec![0.0]]);
        assert!(matches!(build_system(&p), Err(Error::InvalidSpec(m)) if m.contains("zero coupling")));
        let p = params(2, vec![vec![1.0, 0.3], vec![0.2, 1.0]]);
        assert!(matches!(build_system(&p), Err(Error::InvalidSpec(m)) if m.contains("asymmetric")));
        let mut p = params(1, vec![]);
        p.n = 4;
        assert!(build_system(&p).is_err());
        let p = SystemParams { n: 1, k: 0, lambda: vec![], mu: vec![], beta: vec![] };
        assert!(build_system(&p).is_err());
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let g = Grid::line(5.0, 0.1).unwrap();
        let s = case_d();
        assert_eq!(energy(&s, &FieldVector::zeros(g, 3)).unwrap(), 0.0);
    }

    #[test]
    fn soliton_energy_converges_to_four_thirds() {
        // discrete energy of the sampled sech profile: O(h²) from the stencil
        let s = build_system(&params(1, vec![])).unwrap();
        let mut errs = Vec::new();
        for h in [0.04, 0.02] {
            let g = Grid::line(20.0, h).unwrap();
            let e = energy(&s, &soliton_field(&g, &[0.0])).unwrap();
            errs.push((e - 4.0 / 3.0).abs());
        }
        assert!(errs[1] < 2e-4);
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn decoupled_soliton_gradient_is_small() {
        let s = case_d().decoupled();
        let g = Grid::line(20.0, 0.01).unwrap();
        let xs = g.axis_coords(0);
        let comps = (0..3)
            .map(|j| {
                let l: f64 = s.lambda[j];
                xs.iter().map(|&x| (2.0 * l).sqrt() * sech(l.sqrt() * x)).collect()
            })
            .collect();
        let u = FieldVector::new(g, comps).unwrap();
        let gr = gradient(&s, &u).unwrap();
        // truncation error of the stencil, h²/12·w'''' ~ 1e-4
        for c in &gr.comps {
            assert!(crate::math::max_abs(c) < 1e-3);
        }
        let r = nehari_residuals(&s, &u, &ConstraintPartition::singletons(3)).unwrap();
        for v in r {
            assert!(v.abs() < 1e-3);
        }
    }

    #[test]
    fn partition_validation() {
        assert!(ConstraintPartition::new(3, vec![vec![0, 1], vec![2]]).is_ok());
        assert!(ConstraintPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(ConstraintPartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(ConstraintPartition::new(3, vec![vec![0, 1], vec![]]).is_err());
    }

    #[test]
    fn zero_group_is_rejected() {
        let s = case_d();
        let g = Grid::line(10.0, 0.1).unwrap();
        let mut u = soliton_field(&g, &[0.0, 0.0, 0.0]);
        u.comps[2].iter_mut().for_each(|v| *v = 0.0);
        let p = ConstraintPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(nehari_residuals(&s, &u, &p), Err(Error::ZeroGroup(1)));
        let one = ConstraintPartition::single(3);
        let total = nehari_residuals(&s, &u, &one).unwrap()[0];
        let singles = nehari_residuals(&s, &u.clone(), &ConstraintPartition::new(3, vec![vec![0], vec![1], vec![2]]).unwrap());
        assert!(singles.is_err());
        let both = nehari_residuals(&s, &u, &p);
        assert!(both.is_err());
        assert!(total.is_finite());
    }

    #[test]
    fn two_dimensional_gradient_matches_energy() {
        let s = build_system(&SystemParams {
            n: 2,
            k: 2,
            lambda: vec![1.0, 1.5],
            mu: vec![1.0, 0.7],
            beta: vec![vec![0.4]],
        })
        .unwrap();
        let g = Grid::new(2, 4.0, 0.25).unwrap();
        let n = g.len();
        let mut comps = vec![vec![0.0; n]; 2];
        for idx in 0..n {
            let m = g.unflatten(idx);
            let (x, y) = (g.coord(0, m[0]), g.coord(1, m[1]));
            comps[0][idx] = 1.5 * (-(x * x + y * y) / 2.0).exp();
            comps[1][idx] = (-(x - 0.5) * (x - 0.5) - y * y).exp() * (1.0 + 0.1 * x);
        }
        let u = FieldVector::new(g.clone(), comps).unwrap();
        let dir: Vec<Vec<f64>> = (0..2)
            .map(|j| (0..n).map(|i| ((i * 7 + j * 3) as f64 * 0.37).sin() * u.comps[j][i].max(0.05)).collect())
            .collect();
        let gr = gradient(&s, &u).unwrap();
        let d = FieldVector::new(g, dir).unwrap();
        let eps = 1e-4;
        let shift = |t: f64| {
            let mut v = u.clone();
            for j in 0..2 {
                for i in 0..n {
                    v.comps[j][i] += t * d.comps[j][i];
                }
            }
            energy(&s, &v).unwrap()
        };
        let fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        let an = gr.dot(&d);
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "fd {fd} vs {an}");
    }

    fn bump(xs: &[f64], a: f64, c: f64, w: f64) -> Vec<f64> {
        xs.iter().map(|&x| a * (-(x - c) * (x - c) / (w * w)).exp()).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gradient_matches_central_differences(
            a in proptest::collection::vec(0.3f64..2.0, 3),
            c in proptest::collection::vec(-3.0f64..3.0, 3),
            dc in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let s = case_d();
            let g = Grid::line(16.0, 0.05).unwrap();
            let xs = g.axis_coords(0);
            let u = FieldVector::new(g.clone(), (0..3).map(|j| bump(&xs, a[j], c[j], 1.2)).collect()).unwrap();
            let d = FieldVector::new(g.clone(), (0..3).map(|j| bump(&xs, 0.5, dc[j], 0.9)).collect()).unwrap();
            let gr = gradient(&s, &u).unwrap();
            let eps = 1e-4;
            let e = |t: f64| {
                let mut v = u.clone();
                for j in 0..3 { for i in 0..xs.len() { v.comps[j][i] += t * d.comps[j][i]; } }
                energy(&s, &v).unwrap()
            };
            let fd = (e(eps) - e(-eps)) / (2.0 * eps);
            let an = gr.dot(&d);
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-2), "fd {} an {}", fd, an);
        }

        #[test]
        fn energy_and_residuals_are_translation_invariant(
            a in proptest::collection::vec(0.3f64..2.0, 3),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            shift in -40isize..40,
        ) {
            let s = case_d();
            let g = Grid::line(20.0, 0.05).unwrap();
            let xs = g.axis_coords(0);
            let u = FieldVector::new(g.clone(), (0..3).map(|j| bump(&xs, a[j], c[j], 1.0)).collect()).unwrap();
            let v = FieldVector::new(g.clone(), (0..3).map(|j| u.shifted_component(j, shift)).collect()).unwrap();
            let e0 = energy(&s, &u).unwrap();
            let e1 = energy(&s, &v).unwrap();
            prop_assert!((e0 - e1).abs() <= 1e-12 * e0.abs().max(1.0));
            let p = ConstraintPartition::singletons(3);
            let r0 = nehari_residuals(&s, &u, &p).unwrap();
            let r1 = nehari_residuals(&s, &v, &p).unwrap();
            for (x, y) in r0.iter().zip(&r1) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn energy_is_permutation_invariant(
            a in proptest::collection::vec(0.3f64..2.0, 3),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            perm_id in 0usize..6,
        ) {
            let perms = [[0,1,2],[0,2,1],[1,0,2],[1,2,0],[2,0,1],[2,1,0]];
            let perm = perms[perm_id];
            let s = case_d();
            let g = Grid::line(12.0, 0.05).unwrap();
            let xs = g.axis_coords(0);
            let u = FieldVector::new(g.clone(), (0..3).map(|j| bump(&xs, a[j], c[j], 1.0)).collect()).unwrap();
            let sp = s.permuted(&perm);
            let up = FieldVector::new(g, perm.iter().map(|&j| u.comps[j].clone()).collect()).unwrap();
            let e0 = energy(&s, &u).unwrap();
            let e1 = energy(&sp, &up).unwrap();
            prop_assert!((e0 - e1).abs() <= 1e-12 * e0.abs().max(1.0));
        }

        #[test]
        fn grouped_residual_is_sum_of_singletons(
            a in proptest::collection::vec(0.3f64..2.0, 3),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let s = case_d();
            let g = Grid::line(12.0, 0.05).unwrap();
            let xs = g.axis_coords(0);
            let u = FieldVector::new(g, (0..3).map(|j| bump(&xs, a[j], c[j], 1.0)).collect()).unwrap();
            let single = nehari_residuals(&s, &u, &ConstraintPartition::singletons(3)).unwrap();
            let one = nehari_residuals(&s, &u, &ConstraintPartition::single(3)).unwrap();
            let sum: f64 = single.iter().sum();
            prop_assert!((one[0] - sum).abs() <= 1e-12 * sum.abs().max(1.0));
            let p = ConstraintPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
            let two = nehari_residuals(&s, &u, &p).unwrap();
            prop_assert!((two[0] - single[0] - single[1]).abs() <= 1e-12 * two[0].abs().max(1.0));
        }
    }
}
