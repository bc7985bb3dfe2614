//! Translate ansatz for N = 2, 3: component j is a radial profile w_j(|x - c_j e₁|).
//!
//! Shapes live on a radial node grid r_m = mΔr and are updated by preconditioned descent;
//! centers are updated by a pattern search. Every trial is projected with the same multiplier
//! system as the full-grid solver, so energies are comparable with sweep limits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::TriFactor;
use crate::math::{abs, cos, powi, sqrt};
use crate::model::{ConstraintPartition, FieldVector, Grid, Norms, SystemSpec};
use crate::scalar::solve_scalar_radial;
use crate::solver::minimize::{nontrivial, Diagnosis, HistoryPoint};
use crate::solver::projection::{scaled_norms, solve_multipliers};

const PI: f64 = core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzOptions {
    /// Radial cutoff of the profiles.
    pub radial_extent: f64,
    pub dr: f64,
    /// Half-width used for the splitting threshold.
    pub extent: f64,
    pub split_fraction: f64,
    pub max_iter: usize,
    pub tol_e: f64,
    pub window: usize,
    pub initial_center_step: f64,
    pub min_center_step: f64,
    /// Angular nodes for the N = 2 spherical averages.
    pub angular_nodes: usize,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        Self {
            radial_extent: 20.0,
            dr: 0.05,
            extent: 12.0,
            split_fraction: 0.6,
            max_iter: 5000,
            tol_e: 1e-12,
            window: 20,
            initial_center_step: 0.5,
            min_center_step: 1e-3,
            angular_nodes: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzResult {
    pub n: usize,
    pub radii: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    pub centers: Vec<f64>,
    pub energy: f64,
    pub masses: Vec<f64>,
    pub diagnosis: Diagnosis,
    pub iterations: usize,
    pub history: Vec<HistoryPoint>,
}

impl AnsatzResult {
    /// Sample the components onto a Cartesian grid (linear interpolation in r).
    pub fn sample(&self, grid: &Grid) -> Result<FieldVector> {
        let dr = self.radii[1] - self.radii[0];
        let comps = self
            .profiles
            .iter()
            .zip(&self.centers)
            .map(|(w, &c)| {
                (0..grid.len())
                    .map(|node| {
                        let m = grid.unflatten(node);
                        let mut rr = 0.0;
                        for a in 0..grid.n {
                            let x = grid.coord(a, m[a]) - if a == 0 { c } else { 0.0 };
                            rr += x * x;
                        }
                        interp(w, dr, sqrt(rr))
                    })
                    .collect()
            })
            .collect();
        FieldVector::new(grid.clone(), comps)
    }

    pub fn separation(&self) -> f64 {
        spread(&self.centers, &self.masses)
    }
}

fn spread(centers: &[f64], masses: &[f64]) -> f64 {
    let live = nontrivial(masses);
    let mut s = 0.0f64;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if live[i] && live[j] {
                s = s.max(abs(centers[i] - centers[j]));
            }
        }
    }
    s
}

fn interp(w: &[f64], dr: f64, r: f64) -> f64 {
    let x = r / dr;
    let m = x as usize;
    if m + 1 >= w.len() {
        return 0.0;
    }
    let f = x - m as f64;
    (1.0 - f) * w[m] + f * w[m + 1]
}

/// Discretized radial functionals on r_m = mΔr.
pub(crate) struct Radial {
    n: usize,
    dr: f64,
    /// Quadrature weights ω_N r_m^{N-1} Δr (trapezoid).
    pub(crate) weight: Vec<f64>,
    /// Kinetic couplings ω_N r_{m+1/2}^{N-1} / Δr.
    kin: Vec<f64>,
    angular: usize,
}

impl Radial {
    pub(crate) fn new(n: usize, dr: f64, len: usize, angular: usize) -> Self {
        let omega = match n {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let mut weight: Vec<f64> = (0..len).map(|m| omega * powi(m as f64 * dr, n as i32 - 1) * dr).collect();
        weight[0] *= 0.5;
        weight[len - 1] *= 0.5;
        let kin = (0..len - 1).map(|m| omega * powi((m as f64 + 0.5) * dr, n as i32 - 1) / dr).collect();
        Self { n, dr, weight, kin, angular }
    }

    pub(crate) fn len(&self) -> usize {
        self.weight.len()
    }

    /// (K + λW) w
    pub(crate) fn apply(&self, w: &[f64], lambda: f64) -> Vec<f64> {
        let mut y: Vec<f64> = w.iter().zip(&self.weight).map(|(a, b)| lambda * a * b).collect();
        for (m, &k) in self.kin.iter().enumerate() {
            let d = w[m + 1] - w[m];
            y[m] -= k * d;
            y[m + 1] += k * d;
        }
        y
    }

    pub(crate) fn factor(&self, lambda: f64) -> Result<TriFactor> {
        let len = self.len();
        let mut diag: Vec<f64> = self.weight.iter().map(|b| lambda * b).collect();
        let mut off = vec![0.0; len - 1];
        for (m, &k) in self.kin.iter().enumerate() {
            diag[m] += k;
            diag[m + 1] += k;
            off[m] = -k;
        }
        TriFactor::new(&diag, &off)
    }

    /// Average of w²(|x - d e₁|) over the sphere |x| = r_m, for every m.
    fn sphere_average(&self, w: &[f64], d: f64) -> Vec<f64> {
        let len = self.len();
        let dr = self.dr;
        let d = abs(d);
        let sq = |r: f64| {
            let v = interp(w, dr, r);
            v * v
        };
        if self.n == 3 {
            // (1/2rd) ∫_{|r-d|}^{r+d} w²(ρ) ρ dρ via the cumulative integral F
            let mut f = vec![0.0; len];
            for m in 1..len {
                let (a, b) = ((m - 1) as f64 * dr, m as f64 * dr);
                f[m] = f[m - 1] + 0.5 * dr * (w[m - 1] * w[m - 1] * a + w[m] * w[m] * b);
            }
            let cum = |s: f64| {
                let x = s / dr;
                let m = x as usize;
                if m + 1 >= len {
                    f[len - 1]
                } else {
                    let t = x - m as f64;
                    f[m] + t * (f[m + 1] - f[m])
                }
            };
            (0..len)
                .map(|m| {
                    let r = m as f64 * dr;
                    if r * d < 1e-8 {
                        sq(r.max(d))
                    } else {
                        (cum(r + d) - cum(abs(r - d))) / (2.0 * r * d)
                    }
                })
                .collect()
        } else {
            let q = self.angular;
            (0..len)
                .map(|m| {
                    let r = m as f64 * dr;
                    let mut s = 0.0;
                    for a in 0..=q {
                        let th = PI * a as f64 / q as f64;
                        let wgt = if a == 0 || a == q { 0.5 } else { 1.0 };
                        s += wgt * sq(sqrt((r * r + d * d - 2.0 * r * d * cos(th)).max(0.0)));
                    }
                    s / q as f64
                })
                .collect()
        }
    }
}

fn norms(spec: &SystemSpec, rad: &Radial, w: &[Vec<f64>], c: &[f64]) -> Norms {
    let k = spec.k;
    let mut lam = vec![0.0; k];
    let mut quart = vec![0.0; k * k];
    for j in 0..k {
        lam[j] = w[j].iter().zip(rad.apply(&w[j], spec.lambda[j])).map(|(a, b)| a * b).sum();
        quart[j * k + j] = w[j].iter().zip(&rad.weight).map(|(a, b)| powi(*a, 4) * b).sum();
    }
    for i in 0..k {
        for j in i + 1..k {
            let d = c[i] - c[j];
            let ai = rad.sphere_average(&w[i], d);
            let aj = rad.sphere_average(&w[j], d);
            let mut q = 0.0;
            for m in 0..rad.len() {
                q += 0.5 * rad.weight[m] * (w[i][m] * w[i][m] * aj[m] + w[j][m] * w[j][m] * ai[m]);
            }
            quart[i * k + j] = q;
            quart[j * k + i] = q;
        }
    }
    Norms { lam, quart, k }
}

struct Eval {
    w: Vec<Vec<f64>>,
    energy: f64,
}

fn project(spec: &SystemSpec, rad: &Radial, part: &ConstraintPartition, w: &[Vec<f64>], c: &[f64]) -> Result<Eval> {
    let n0 = norms(spec, rad, w, c);
    let m = solve_multipliers(spec, &n0, part)?;
    let scaled = scaled_norms(&n0, part, &m.t);
    let mut out = w.to_vec();
    for (g, members) in part.groups.iter().enumerate() {
        for &j in members {
            for v in out[j].iter_mut() {
                *v *= m.t[g];
            }
        }
    }
    Ok(Eval { w: out, energy: scaled.energy(spec) })
}

fn masses(rad: &Radial, w: &[Vec<f64>]) -> Vec<f64> {
    w.iter().map(|c| c.iter().zip(&rad.weight).map(|(a, b)| a * a * b).sum()).collect()
}

/// Minimize over radial shapes and e₁-centers, starting from scalar solitons at `centers`.
pub fn minimize_ansatz(spec: &SystemSpec, partition: &ConstraintPartition, centers: &[f64], opts: &AnsatzOptions) -> Result<AnsatzResult> {
    if !(spec.n == 2 || spec.n == 3) {
        return Err(Error::InvalidGrid(format!("the translate ansatz is for N = 2, 3 (got N = {})", spec.n)));
    }
    if centers.len() != spec.k {
        return Err(Error::DimensionMismatch("one center per component".into()));
    }
    if !(opts.dr > 0.0 && opts.radial_extent > 10.0 * opts.dr) {
        return Err(Error::InvalidGrid("radial grid needs dr > 0 and at least 10 nodes".into()));
    }
    let len = (opts.radial_extent / opts.dr) as usize + 1;
    let rad = Radial::new(spec.n, opts.dr, len, opts.angular_nodes.max(8));
    let radii: Vec<f64> = (0..len).map(|m| m as f64 * opts.dr).collect();
    let mut w = Vec::with_capacity(spec.k);
    for j in 0..spec.k {
        let s = solve_scalar_radial(spec.lambda[j], spec.mu[j], spec.n, opts.radial_extent.max(40.0 / sqrt(spec.lambda[j])), opts.dr.min(0.01))?;
        w.push(radii.iter().map(|&r| s.profile.value_at(r)).collect::<Vec<f64>>());
    }
    let factors = spec.lambda.iter().map(|&l| rad.factor(l)).collect::<Result<Vec<_>>>()?;
    let mut c = centers.to_vec();
    let mut cur = project(spec, &rad, partition, &w, &c)?;
    let mut alpha = 1.0;
    let mut step = opts.initial_center_step;
    let mut energies = vec![cur.energy];
    let mut history = Vec::new();
    let mut diagnosis = Diagnosis::MaxIterations;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        // shape step
        let k = spec.k;
        let mut dir = Vec::with_capacity(k);
        for j in 0..k {
            let mut g = rad.apply(&cur.w[j], spec.lambda[j]);
            let mut dens = vec![0.0; len];
            for i in 0..k {
                if i != j {
                    let a = rad.sphere_average(&cur.w[i], c[i] - c[j]);
                    for (d, v) in dens.iter_mut().zip(a) {
                        *d += spec.beta(i, j) * v;
                    }
                }
            }
            for m in 0..len {
                let u = cur.w[j][m];
                g[m] -= rad.weight[m] * u * (spec.mu[j] * u * u + dens[m]);
            }
            factors[j].solve_in_place(&mut g);
            dir.push(g);
        }
        let mut a = alpha;
        let mut moved = false;
        for _ in 0..30 {
            let trial: Vec<Vec<f64>> = cur.w.iter().zip(&dir).map(|(u, d)| u.iter().zip(d).map(|(x, y)| x - a * y).collect()).collect();
            match project(spec, &rad, partition, &trial, &c) {
                Ok(e) if e.energy < cur.energy => {
                    cur = e;
                    moved = true;
                    alpha = (a * 1.5).min(2.0);
                    break;
                }
                Ok(_) | Err(Error::ProjectionInfeasible(_)) => a *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !moved {
            alpha = 1.0;
        }
        // center pattern search: single components, then centroid-ordered clusters
        let mut best: Option<(Vec<f64>, Eval)> = None;
        let mut cands: Vec<Vec<f64>> = Vec::new();
        for j in 0..k {
            for s in [step, -step] {
                let mut t = c.clone();
                t[j] += s;
                cands.push(t);
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| c[x].partial_cmp(&c[y]).unwrap_or(core::cmp::Ordering::Equal));
        for cut in 1..k {
            for s in [step, -step] {
                let mut t = c.clone();
                for (p, &j) in order.iter().enumerate() {
                    t[j] += if p < cut { -s } else { s };
                }
                cands.push(t);
            }
        }
        for t in cands {
            if let Ok(e) = project(spec, &rad, partition, &cur.w, &t) {
                if e.energy < best.as_ref().map_or(cur.energy, |b| b.1.energy) {
                    best = Some((t, e));
                }
            }
        }
        let translated = best.is_some();
        match best {
            Some((t, e)) => {
                c = t;
                cur = e;
            }
            None => step *= 0.5,
        }
        energies.push(cur.energy);
        let ms = masses(&rad, &cur.w);
        let sep = spread(&c, &ms);
        history.push(HistoryPoint { iteration: it, energy: cur.energy, separation: sep, gradient_norm: f64::NAN, translated });
        if sep > opts.split_fraction * opts.extent {
            let tail = &energies[energies.len().saturating_sub(opts.window + 1)..];
            if tail.windows(2).all(|p| p[1] <= p[0]) {
                diagnosis = Diagnosis::SplittingDetected;
                break;
            }
        }
        if energies.len() > opts.window && step < opts.min_center_step {
            let win = &energies[energies.len() - 1 - opts.window..];
            if win[0] - win[win.len() - 1] <= opts.tol_e * abs(cur.energy).max(1.0) {
                diagnosis = if nontrivial(&ms).iter().all(|&l| l) { Diagnosis::Attained } else { Diagnosis::Degenerate };
                break;
            }
        }
    }
    let ms = masses(&rad, &cur.w);
    Ok(AnsatzResult {
        n: spec.n,
        radii,
        profiles: cur.w,
        centers: c,
        energy: cur.energy,
        masses: ms,
        diagnosis,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_system, SystemParams};

    fn spec(n: usize, lambda: Vec<f64>, beta: Vec<Vec<f64>>) -> SystemSpec {
        let k = lambda.len();
        build_system(&SystemParams { n, k, lambda, mu: vec![1.0; k], beta }).unwrap()
    }

    #[test]
    fn decoupled_ansatz_reproduces_scalar_energies() {
        for n in [2, 3] {
            let s = spec(n, vec![1.0, 2.0], vec![vec![1e-300]]).decoupled();
            let opts = AnsatzOptions { dr: 0.02, max_iter: 400, ..Default::default() };
            let r = minimize_ansatz(&s, &ConstraintPartition::singletons(2), &[0.0, 0.0], &opts).unwrap();
            let e: f64 = (0..2).map(|j| solve_scalar_radial(s.lambda[j], 1.0, n, 30.0, 0.005).unwrap().energy).sum();
            assert!((r.energy - e).abs() < 2e-3 * e, "N={n}: {} vs {e}", r.energy);
        }
    }

    #[test]
    fn sphere_average_reproduces_gaussian_overlap() {
        let rad = Radial::new(3, 0.01, 2001, 64);
        let w: Vec<f64> = (0..2001).map(|m| crate::math::exp(-0.5 * powi(m as f64 * 0.01, 2))).collect();
        let d = 1.7;
        let a = rad.sphere_average(&w, d);
        let b: f64 = rad.weight.iter().zip(&a).zip(&w).map(|((q, x), y)| q * x * y * y).sum();
        // ∫ e^{-|x|²} e^{-|x-d e₁|²} dx = (π/2)^{3/2} e^{-d²/2}
        let exact = (PI / 2.0).powf(1.5) * (-d * d / 2.0).exp();
        assert!((b - exact).abs() < 1e-4 * exact, "{b} {exact}");
    }

    #[test]
    fn attractive_pair_stays_together_repulsive_pair_splits() {
        let opts = AnsatzOptions { dr: 0.05, extent: 8.0, max_iter: 3000, ..Default::default() };
        let att = spec(3, vec![1.0, 1.0], vec![vec![0.5]]);
        let r = minimize_ansatz(&att, &ConstraintPartition::singletons(2), &[-1.0, 1.0], &opts).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::Attained);
        assert!(r.separation() < 0.05);
        let rep = spec(3, vec![1.0, 1.0], vec![vec![-0.5]]);
        let r = minimize_ansatz(&rep, &ConstraintPartition::singletons(2), &[-1.0, 1.0], &opts).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::SplittingDetected);
    }
}
