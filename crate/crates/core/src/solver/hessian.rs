//! Second variation of the energy and its low spectrum.
//!
//! Unknowns are interleaved as `node * k + j`, so the discrete Hessian is banded with
//! half-bandwidth `k * stride(0)` (that is `k` on a line).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, BandCholesky, BandedSym};
use crate::math::{abs, sqrt};
use crate::model::{gradient, FieldVector, SystemSpec};

/// Banded matrix of the second variation at `u`:
/// diagonal blocks -Δ + λ_j - 3μ_j u_j² - Σ_{i≠j} β_ij u_i², off-diagonal -2β_ij u_i u_j.
pub fn hessian_matrix(spec: &SystemSpec, u: &FieldVector) -> Result<BandedSym> {
    if u.k() != spec.k || u.grid.n != spec.n {
        return Err(Error::DimensionMismatch("field does not match the system".into()));
    }
    let k = spec.k;
    let grid = &u.grid;
    let n = grid.len();
    let bw = k * grid.stride(0).max(1);
    let mut h = BandedSym::zeros(n * k, bw);
    for node in 0..n {
        let m = grid.unflatten(node);
        let mut lap = 0.0;
        for a in 0..grid.n {
            lap += 2.0 / (grid.spacing[a] * grid.spacing[a]);
        }
        for j in 0..k {
            let row = node * k + j;
            let mut d = lap + spec.lambda[j] - 3.0 * spec.mu[j] * u.comps[j][node] * u.comps[j][node];
            for i in 0..k {
                if i != j {
                    d -= spec.beta(i, j) * u.comps[i][node] * u.comps[i][node];
                }
            }
            h.add(row, row, d);
            for i in 0..j {
                let v = -2.0 * spec.beta(i, j) * u.comps[i][node] * u.comps[j][node];
                if v != 0.0 {
                    h.add(row, node * k + i, v);
                }
            }
            // neighbours with larger index along every axis
            for a in 0..grid.n {
                if m[a] + 1 < grid.points[a] {
                    let nb = node + grid.stride(a);
                    h.add(nb * k + j, row, -1.0 / (grid.spacing[a] * grid.spacing[a]));
                }
            }
        }
    }
    Ok(h)
}

fn interleave(u: &FieldVector) -> Vec<f64> {
    let k = u.k();
    let n = u.grid.len();
    let mut x = vec![0.0; n * k];
    for (j, c) in u.comps.iter().enumerate() {
        for (node, &v) in c.iter().enumerate() {
            x[node * k + j] = v;
        }
    }
    x
}

fn deinterleave(template: &FieldVector, x: &[f64]) -> FieldVector {
    let k = template.k();
    let n = template.grid.len();
    let comps = (0..k).map(|j| (0..n).map(|node| x[node * k + j]).collect()).collect();
    FieldVector { grid: template.grid.clone(), comps }
}

/// H·dir at `u`, as a field (L² representation: the quadratic form is ⟨dir, H dir⟩ on the grid).
pub fn hessian_apply(spec: &SystemSpec, u: &FieldVector, dir: &FieldVector) -> Result<FieldVector> {
    let h = hessian_matrix(spec, u)?;
    let x = interleave(dir);
    let mut y = vec![0.0; x.len()];
    h.matvec(&x, &mut y);
    Ok(deinterleave(u, &y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseResult {
    /// Negative eigenvalues, translation modes excluded.
    pub index: usize,
    pub zero_modes: usize,
    /// Lowest computed eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Overlap of each computed eigenvector with the span of componentwise x-derivatives.
    pub translation_overlap: Vec<f64>,
    pub zero_tol: f64,
    /// Eigenvalues below -zero_tol counted from the LDLᵀ inertia of H + zero_tol·I.
    pub inertia_negative: usize,
    pub iterations: usize,
}

/// An eigenpair whose vector lies this much in the translation span is a zero mode, provided
/// its eigenvalue is within `TRANSLATION_SLACK · zero_tol` of zero.
pub const TRANSLATION_OVERLAP: f64 = 0.9;
pub const TRANSLATION_SLACK: f64 = 1e3;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalize columns in place (two passes of modified Gram-Schmidt); drops dependent ones.
fn orthonormalize(cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols.drain(..) {
        let n0 = sqrt(dot(&c, &c));
        for _ in 0..2 {
            for q in &out {
                let p = dot(&c, q);
                for (x, y) in c.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let nn = sqrt(dot(&c, &c));
        if nn > 1e-10 * n0 && nn > 0.0 {
            for x in c.iter_mut() {
                *x /= nn;
            }
            out.push(c);
        }
    }
    *cols = out;
}

/// Orthonormal basis of span{e_j ⊗ ∂_x u_j} (central differences along axis 0).
fn translation_basis(u: &FieldVector) -> Vec<Vec<f64>> {
    let k = u.k();
    let n = u.grid.len();
    let s0 = u.grid.stride(0);
    let n0 = u.grid.points[0];
    let mut cols = Vec::new();
    for j in 0..k {
        let mut v = vec![0.0; n * k];
        for node in 0..n {
            let i = (node / s0) % n0;
            let l = if i > 0 { u.comps[j][node - s0] } else { 0.0 };
            let r = if i + 1 < n0 { u.comps[j][node + s0] } else { 0.0 };
            v[node * k + j] = r - l;
        }
        if v.iter().any(|&x| x != 0.0) {
            cols.push(v);
        }
    }
    orthonormalize(&mut cols);
    cols
}

fn seed_vector(len: usize, c: usize) -> Vec<f64> {
    let a = 0.754_877_666 * (c as f64 + 1.0);
    (0..len).map(|i| crate::math::cos(a * i as f64 + 0.3 * c as f64) + 0.5 * crate::math::cos(0.011 * (c + 2) as f64 * i as f64)).collect()
}

/// Morse index and zero-mode count of the critical point `u`.
///
/// `zero_tol` defaults to `zero_tol_factor` times the largest computed |eigenvalue|.
pub fn morse_index(spec: &SystemSpec, u: &FieldVector, zero_tol: Option<f64>, zero_tol_factor: f64) -> Result<MorseResult> {
    let g = gradient(spec, u)?;
    let gl2 = sqrt(g.dot(&g));
    let scale = sqrt(u.dot(u)).max(1e-300);
    // the L² norm amplifies residual high modes by ~1/h², so compare against that scale
    let hmin = u.grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    if gl2 > 1e-4 * scale / (hmin * hmin).min(1.0) {
        return Err(Error::NotCritical(gl2));
    }
    let h = hessian_matrix(spec, u)?;
    let len = h.n;
    let lam_min = spec.lambda_min();
    let p = (spec.k + spec.n + 3 + 6).min(len);

    let (lo, _) = h.gershgorin();
    let mut sigma = lo - 1.0;
    let mut chol = BandCholesky::new(&h.shifted(-sigma)).map_err(|_| Error::EigenNonConvergence("shifted Hessian not positive definite".into()))?;

    let mut x: Vec<Vec<f64>> = Vec::with_capacity(p);
    x.extend(translation_basis(u));
    x.push(interleave(u));
    let mut c = 0;
    while x.len() < p {
        x.push(seed_vector(len, c));
        c += 1;
    }
    x.truncate(p);
    orthonormalize(&mut x);

    let mut theta = Vec::new();
    let mut hx = vec![0.0; len];
    let mut refined = false;
    for it in 0..3000 {
        for col in x.iter_mut() {
            chol.solve_in_place(col);
        }
        orthonormalize(&mut x);
        let q = x.len();
        let hcols: Vec<Vec<f64>> = x
            .iter()
            .map(|col| {
                let mut y = vec![0.0; len];
                h.matvec(col, &mut y);
                y
            })
            .collect();
        let mut t = vec![0.0; q * q];
        for a in 0..q {
            for b in a..q {
                let v = dot(&x[a], &hcols[b]);
                t[a * q + b] = v;
                t[b * q + a] = v;
            }
        }
        let (vals, vecs) = sym_eigen(&t, q);
        let mut nx = vec![vec![0.0; len]; q];
        let mut nh = vec![vec![0.0; len]; q];
        for r in 0..q {
            for a in 0..q {
                let w = vecs[r * q + a];
                if w != 0.0 {
                    for ((o, oh), (xa, ha)) in nx[r].iter_mut().zip(nh[r].iter_mut()).zip(x[a].iter().zip(&hcols[a])) {
                        *o += w * xa;
                        *oh += w * ha;
                    }
                }
            }
        }
        x = nx;
        theta = vals;
        let top = theta.iter().map(|t| abs(*t)).fold(1.0, f64::max);
        let mut done = true;
        for r in 0..q {
            if theta[r] < 0.5 * lam_min {
                for ((d, a), b) in hx.iter_mut().zip(&nh[r]).zip(&x[r]) {
                    *d = a - theta[r] * b;
                }
                if sqrt(dot(&hx, &hx)) > 1e-10 * top {
                    done = false;
                }
            }
        }
        if theta.iter().all(|&t| t < 0.5 * lam_min) && q < len {
            return Err(Error::EigenNonConvergence(format!(
                "all {q} computed eigenvalues lie below λ_min/2; the block is too small"
            )));
        }
        if done {
            let zt = zero_tol.unwrap_or(zero_tol_factor * theta.iter().map(|t| abs(*t)).fold(0.0, f64::max));
            let tb = translation_basis(u);
            let overlap: Vec<f64> = x
                .iter()
                .map(|v| {
                    let nv = dot(v, v);
                    tb.iter().map(|b| dot(v, b) * dot(v, b)).sum::<f64>() / nv
                })
                .collect();
            let mut index = 0;
            let mut zero_modes = 0;
            for (r, &t) in theta.iter().enumerate() {
                let translational = overlap[r] >= TRANSLATION_OVERLAP && abs(t) <= TRANSLATION_SLACK * zt;
                if abs(t) <= zt || translational {
                    zero_modes += 1;
                } else if t < -zt {
                    index += 1;
                }
            }
            let (inertia_negative, _, _) = h.shifted(zt).inertia();
            return Ok(MorseResult {
                index,
                zero_modes,
                eigenvalues: theta,
                translation_overlap: overlap,
                zero_tol: zt,
                inertia_negative,
                iterations: it + 1,
            });
        }
        if !refined && it >= 5 {
            refined = true;
            let s = theta[0] - (0.1 * abs(theta[0])).max(0.5);
            if s > sigma {
                if let Ok(c2) = BandCholesky::new(&h.shifted(-s)) {
                    sigma = s;
                    chol = c2;
                }
            }
        }
    }
    Err(Error::EigenNonConvergence(format!(
        "subspace iteration did not converge in 3000 steps (lowest Ritz value {:?})",
        theta.first()
    )))
}
