//! Constrained descent on the Nehari-type manifold of a constraint partition (N = 1 grids).
//!
//! Each iteration takes a preconditioned gradient step (metric -Δ + λ_j per component,
//! Barzilai–Borwein step length), projects back with the multiplier system, and then tries
//! rigid one-cell translations of single components and of centroid-ordered clusters.
//! Translations are kept only when they strictly lower the projected energy; they let
//! weakly interacting pieces move at a useful speed, since the gradient flow moves them
//! only at the rate of the exponentially small interaction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::TriFactor;
use crate::math::{abs, sqrt};
use crate::model::{gradient, shift_axis0, ConstraintPartition, FieldVector, SystemSpec};
use crate::solver::hessian::{morse_index, MorseResult};
use crate::solver::projection::{project_nehari, Projection};

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Stop when ‖∇ℰ‖ in the H⁻¹ metric falls below this.
    pub tol_g: f64,
    /// ... and the energy moved by less than this over `window` iterations.
    pub tol_e: f64,
    pub window: usize,
    pub max_iter: usize,
    /// Energy distance to a split limit that counts as "at the limit".
    pub tol_split: f64,
    /// Energies of the split configurations, when known.
    pub split_limits: Option<Vec<f64>>,
    /// Centroid spread, as a fraction of the half-width L, that counts as splitting.
    pub split_fraction: f64,
    pub translation_moves: bool,
    pub morse: bool,
    /// Zero-mode tolerance relative to the largest computed eigenvalue magnitude.
    pub zero_tol_factor: f64,
    pub record_history: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol_g: 1e-8,
            tol_e: 1e-12,
            window: 20,
            max_iter: 20_000,
            tol_split: 1e-3,
            split_limits: None,
            split_fraction: 0.6,
            translation_moves: true,
            morse: true,
            zero_tol_factor: 1e-6,
            record_history: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnosis {
    Attained,
    SplittingDetected,
    MaxIterations,
    /// Converged, but some component fell below the triviality floor.
    Degenerate,
}

impl Diagnosis {
    pub fn name(&self) -> &'static str {
        match self {
            Diagnosis::Attained => "attained",
            Diagnosis::SplittingDetected => "splitting-detected",
            Diagnosis::MaxIterations => "max-iterations",
            Diagnosis::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryPoint {
    pub iteration: usize,
    pub energy: f64,
    /// Largest distance between centroids of nontrivial components.
    pub separation: f64,
    pub gradient_norm: f64,
    /// Whether this iteration's accepted move was a translation.
    pub translated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    pub fields: FieldVector,
    pub energy: f64,
    pub partition: ConstraintPartition,
    pub residuals: Vec<f64>,
    pub gradient_norm: f64,
    pub morse: Option<MorseResult>,
    pub centroids: Vec<f64>,
    pub masses: Vec<f64>,
    pub diagnosis: Diagnosis,
    pub iterations: usize,
    pub history: Vec<HistoryPoint>,
}

impl GroundStateResult {
    pub fn morse_index(&self) -> Option<usize> {
        self.morse.as_ref().map(|m| m.index)
    }

    pub fn zero_modes(&self) -> Option<usize> {
        self.morse.as_ref().map(|m| m.zero_modes)
    }

    pub fn separation(&self) -> f64 {
        separation(&self.centroids, &self.masses)
    }
}

/// A component is nontrivial when its mass is at least this fraction of the largest.
pub const TRIVIALITY_FLOOR: f64 = 1e-4;

/// Translation moves taken per iteration at most.
const TRANSLATION_ROUNDS: usize = 2;

pub fn nontrivial(masses: &[f64]) -> Vec<bool> {
    let top = masses.iter().cloned().fold(0.0, f64::max);
    masses.iter().map(|&m| m >= TRIVIALITY_FLOOR * top && m > 0.0).collect()
}

fn separation(centroids: &[f64], masses: &[f64]) -> f64 {
    let live = nontrivial(masses);
    let mut s = 0.0f64;
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            if live[i] && live[j] {
                s = s.max(abs(centroids[i] - centroids[j]));
            }
        }
    }
    s
}

/// Per-component factorizations of -Δ_h + λ_j on a 1D grid.
pub(crate) struct Preconditioner {
    factors: Vec<TriFactor>,
}

impl Preconditioner {
    pub(crate) fn new(spec: &SystemSpec, n: usize, h: f64) -> Result<Self> {
        let off = vec![-1.0 / (h * h); n.saturating_sub(1)];
        let factors = spec
            .lambda
            .iter()
            .map(|&l| TriFactor::new(&vec![2.0 / (h * h) + l; n], &off))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub(crate) fn apply(&self, g: &FieldVector) -> FieldVector {
        let mut out = g.clone();
        for (c, f) in out.comps.iter_mut().zip(&self.factors) {
            f.solve_in_place(c);
        }
        out
    }
}

fn axpy(u: &FieldVector, a: f64, d: &FieldVector) -> FieldVector {
    let mut out = u.clone();
    for (c, dc) in out.comps.iter_mut().zip(&d.comps) {
        for (x, y) in c.iter_mut().zip(dc) {
            *x += a * y;
        }
    }
    out
}

fn diff(a: &FieldVector, b: &FieldVector) -> FieldVector {
    axpy(a, -1.0, b)
}

fn noise(e: f64) -> f64 {
    1e-14 * abs(e).max(1.0)
}

struct State {
    proj: Projection,
    energy: f64,
    grad: FieldVector,
    pgrad: FieldVector,
    gnorm: f64,
}

fn evaluate(spec: &SystemSpec, proj: Projection, pre: &Preconditioner) -> Result<State> {
    let energy = proj.energy(spec);
    let grad = gradient(spec, &proj.field)?;
    let pgrad = pre.apply(&grad);
    let gnorm = sqrt(grad.dot(&pgrad).max(0.0));
    Ok(State { proj, energy, grad, pgrad, gnorm })
}

/// Candidate rigid moves: (component set, cells) pairs.
fn translation_candidates(u: &FieldVector) -> Vec<Vec<(usize, isize)>> {
    let k = u.k();
    let masses: Vec<f64> = (0..k).map(|j| u.mass(j)).collect();
    let live = nontrivial(&masses);
    let mut out = Vec::new();
    for j in 0..k {
        if live[j] {
            out.push(vec![(j, 1)]);
            out.push(vec![(j, -1)]);
        }
    }
    let mut order: Vec<usize> = (0..k).filter(|&j| live[j]).collect();
    let cent: Vec<f64> = (0..k).map(|j| u.centroid(j)).collect();
    order.sort_by(|&a, &b| cent[a].partial_cmp(&cent[b]).unwrap_or(core::cmp::Ordering::Equal));
    for cut in 1..order.len() {
        for dir in [1isize, -1] {
            let mv: Vec<(usize, isize)> = order
                .iter()
                .enumerate()
                .map(|(p, &j)| (j, if p < cut { -dir } else { dir }))
                .collect();
            out.push(mv);
        }
    }
    out
}

fn apply_moves(u: &FieldVector, moves: &[(usize, isize)]) -> FieldVector {
    let mut out = u.clone();
    for &(j, cells) in moves {
        out.comps[j] = shift_axis0(&u.grid, &u.comps[j], cells);
    }
    out
}

/// Minimize the energy over the constraint manifold of `partition`, starting from `init`.
pub fn minimize(
    spec: &SystemSpec,
    partition: &ConstraintPartition,
    init: &FieldVector,
    opts: &MinimizeOptions,
) -> Result<GroundStateResult> {
    let grid = init.grid.clone();
    if grid.n != 1 || spec.n != 1 {
        return Err(Error::InvalidGrid(
            "full-grid minimization needs N = 1; use the translate ansatz for N = 2, 3".into(),
        ));
    }
    if init.k() != spec.k {
        return Err(Error::DimensionMismatch(format!("init has {} components, system has {}", init.k(), spec.k)));
    }
    let n = grid.len();
    let h = grid.spacing[0];
    let pre = Preconditioner::new(spec, n, h)?;
    let mut st = evaluate(spec, project_nehari(spec, init, partition)?, &pre)?;
    let mut energies: Vec<f64> = vec![st.energy];
    let mut history = Vec::new();
    let mut alpha = 1.0;
    let mut diagnosis = Diagnosis::MaxIterations;
    let split_distance = opts.split_fraction * grid.extent[0];
    let mut iterations = 0;
    let mut stalled = 0usize;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        // gradient step with backtracking
        let mut accepted: Option<State> = None;
        let mut infeasible = 0;
        let mut a = alpha;
        for _ in 0..40 {
            let trial = axpy(&st.proj.field, -a, &st.pgrad);
            match project_nehari(spec, &trial, partition) {
                Ok(p) => {
                    let e = p.energy(spec);
                    if e.is_finite() && e <= st.energy + noise(st.energy) {
                        accepted = Some(evaluate(spec, p, &pre)?);
                        break;
                    }
                    a *= 0.5;
                }
                Err(Error::ProjectionInfeasible(msg)) => {
                    infeasible += 1;
                    if infeasible > 10 {
                        return Err(Error::ProjectionInfeasible(msg));
                    }
                    a *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let mut translated = false;
        match accepted {
            Some(new) => {
                let s = diff(&new.proj.field, &st.proj.field);
                let y = diff(&new.grad, &st.grad);
                let py = diff(&new.pgrad, &st.pgrad);
                let sy = s.dot(&y);
                let ypy = y.dot(&py);
                alpha = if sy > 0.0 && ypy > 0.0 { (sy / ypy).clamp(1e-4, 50.0) } else { 1.0 };
                st = new;
                stalled = 0;
            }
            None => {
                stalled += 1;
                alpha = 1.0;
            }
        }

        if opts.translation_moves {
            // greedy: keep taking the best strictly improving move
            for _ in 0..TRANSLATION_ROUNDS {
                let mut best: Option<State> = None;
                for mv in translation_candidates(&st.proj.field) {
                    let trial = apply_moves(&st.proj.field, &mv);
                    if let Ok(p) = project_nehari(spec, &trial, partition) {
                        let e = p.energy(spec);
                        let bar = best.as_ref().map_or(st.energy, |b| b.energy);
                        if e < bar {
                            best = Some(evaluate(spec, p, &pre)?);
                        }
                    }
                }
                let Some(b) = best else { break };
                st = b;
                translated = true;
                alpha = 1.0;
                stalled = 0;
            }
        }

        energies.push(st.energy);
        let masses: Vec<f64> = (0..spec.k).map(|j| st.proj.field.mass(j)).collect();
        let centroids: Vec<f64> = (0..spec.k).map(|j| st.proj.field.centroid(j)).collect();
        let sep = separation(&centroids, &masses);
        if opts.record_history {
            history.push(HistoryPoint { iteration: it, energy: st.energy, separation: sep, gradient_norm: st.gnorm, translated });
        }

        // splitting: spread past the threshold while the energy keeps falling
        if sep > split_distance {
            let w = energies.len().min(opts.window + 1);
            let tail = &energies[energies.len() - w..];
            let monotone = tail.windows(2).all(|p| p[1] <= p[0] + noise(p[0]));
            let near_limit = match &opts.split_limits {
                None => true,
                Some(l) => l.iter().any(|&lim| abs(st.energy - lim) <= opts.tol_split),
            };
            if monotone && near_limit {
                diagnosis = Diagnosis::SplittingDetected;
                break;
            }
        }

        let settled = energies.len() > opts.window && {
            let w = &energies[energies.len() - 1 - opts.window..];
            w.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - w.iter().cloned().fold(f64::INFINITY, f64::min)
                <= opts.tol_e
        };
        if (st.gnorm <= opts.tol_g && settled && !translated) || (stalled >= 3 && !translated) {
            diagnosis = if st.gnorm <= opts.tol_g * 10.0 { Diagnosis::Attained } else { Diagnosis::MaxIterations };
            break;
        }
    }

    let fields = st.proj.field;
    let masses: Vec<f64> = (0..spec.k).map(|j| fields.mass(j)).collect();
    let centroids: Vec<f64> = (0..spec.k).map(|j| fields.centroid(j)).collect();
    if diagnosis == Diagnosis::Attained {
        if nontrivial(&masses).iter().any(|&l| !l) {
            diagnosis = Diagnosis::Degenerate;
        } else if separation(&centroids, &masses) > split_distance {
            diagnosis = Diagnosis::SplittingDetected;
        }
    }
    let residuals = crate::model::nehari_residuals(spec, &fields, partition)?;
    let morse = if opts.morse && diagnosis == Diagnosis::Attained {
        Some(morse_index(spec, &fields, None, opts.zero_tol_factor)?)
    } else {
        None
    };
    Ok(GroundStateResult {
        fields,
        energy: st.energy,
        partition: partition.clone(),
        residuals,
        gradient_norm: st.gnorm,
        morse,
        centroids,
        masses,
        diagnosis,
        iterations,
        history,
    })
}

/// ‖∇ℰ(u)‖ in the (-Δ + λ)⁻¹ metric (N = 1).
pub fn gradient_norm(spec: &SystemSpec, u: &FieldVector) -> Result<f64> {
    if u.grid.n != 1 {
        return Err(Error::InvalidGrid("gradient norm is implemented for N = 1".into()));
    }
    let pre = Preconditioner::new(spec, u.grid.len(), u.grid.spacing[0])?;
    let g = gradient(spec, u)?;
    Ok(sqrt(g.dot(&pre.apply(&g)).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_system, energy, Grid, Norms, SystemParams};
    use crate::solver::hessian::hessian_matrix;
    use crate::solver::init::soliton_field;
    use proptest::prelude::*;

    fn spec(lambda: Vec<f64>, beta: Vec<Vec<f64>>) -> SystemSpec {
        let k = lambda.len();
        build_system(&SystemParams { n: 1, k, lambda, mu: vec![1.0; k], beta }).unwrap()
    }

    #[test]
    fn scalar_soliton_morse_index_matches_dense_oracle() {
        let g = Grid::line(8.0, 0.1).unwrap();
        let s = spec(vec![1.0], vec![]);
        let init = soliton_field(&s, &g, &[0.0]).unwrap();
        let r = minimize(&s, &ConstraintPartition::singletons(1), &init, &MinimizeOptions::default()).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::Attained);
        let m = r.morse.clone().unwrap();
        assert_eq!((m.index, m.zero_modes), (1, 1));
        let h = hessian_matrix(&s, &r.fields).unwrap();
        let n = h.n;
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= h.bw { h.get(i, j) } else { 0.0 });
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(dense).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&m.eigenvalues).take(4) {
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} {b}");
        }
        assert_eq!(ev.iter().filter(|&&v| v < -m.zero_tol).count(), 1);
        assert_eq!(ev.iter().filter(|&&v| v.abs() <= m.zero_tol).count(), 1);
    }

    #[test]
    fn converged_energy_stays_below_the_decoupled_sum() {
        let g = Grid::line(16.0, 0.05).unwrap();
        let s = spec(vec![1.0, 2.0], vec![vec![0.3]]);
        let init = soliton_field(&s, &g, &[0.0, 0.0]).unwrap();
        let r = minimize(&s, &ConstraintPartition::singletons(2), &init, &MinimizeOptions::default()).unwrap();
        let dec = s.decoupled();
        let d = minimize(&dec, &ConstraintPartition::singletons(2), &init, &MinimizeOptions { morse: false, ..Default::default() }).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::Attained);
        assert!(r.energy < d.energy);
        assert_eq!(r.morse_index(), Some(2));
    }

    #[test]
    fn splitting_is_detected_for_a_repulsive_pair() {
        let g = Grid::line(10.0, 0.05).unwrap();
        let s = spec(vec![1.0, 1.0], vec![vec![-0.5]]);
        let init = soliton_field(&s, &g, &[-0.5, 0.5]).unwrap();
        let r = minimize(&s, &ConstraintPartition::singletons(2), &init, &MinimizeOptions::default()).unwrap();
        assert_eq!(r.diagnosis, Diagnosis::SplittingDetected);
        assert!(r.separation() > 6.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = Grid::line(6.0, 0.1).unwrap();
        let s = spec(vec![1.0, 2.0, 1.5], vec![vec![0.4, -0.3], vec![0.2]]);
        let u = soliton_field(&s, &g, &[0.0, 0.7, -0.6]).unwrap();
        let grad = gradient(&s, &u).unwrap();
        let dv = g.cell_volume();
        for (j, node) in [(0usize, 60usize), (1, 55), (2, 70)] {
            let eps = 1e-4;
            let mut p = u.clone();
            p.comps[j][node] += eps;
            let mut m = u.clone();
            m.comps[j][node] -= eps;
            let fd = (energy(&s, &p).unwrap() - energy(&s, &m).unwrap()) / (2.0 * eps * dv);
            let an = grad.comps[j][node];
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{fd} {an}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

        #[test]
        fn accepted_iterates_descend_and_stay_on_the_manifold(
            b12 in -0.4f64..0.4, b13 in -0.4f64..0.4, b23 in -0.4f64..0.4,
            c1 in -1.0f64..1.0, c2 in -1.0f64..1.0,
        ) {
            prop_assume!(b12.abs() > 1e-3 && b13.abs() > 1e-3 && b23.abs() > 1e-3);
            let g = Grid::line(8.0, 0.1).unwrap();
            let s = spec(vec![1.0, 1.5, 2.0], vec![vec![b12, b13], vec![b23]]);
            let init = soliton_field(&s, &g, &[c1, c2, 0.0]).unwrap();
            let part = ConstraintPartition::singletons(3);
            let opts = MinimizeOptions { max_iter: 40, morse: false, ..Default::default() };
            if let Ok(r) = minimize(&s, &part, &init, &opts) {
                let e: Vec<f64> = r.history.iter().map(|h| h.energy).collect();
                for w in e.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0));
                }
                let n = Norms::compute(&s, &r.fields).unwrap();
                let quarter: f64 = 0.25 * n.lam.iter().sum::<f64>();
                prop_assert!((n.energy(&s) - quarter).abs() <= 1e-8 * quarter);
            }
        }
    }
}
