//! Weighted Rayleigh quotients: ρ̂ (inf ‖u‖²_λ / ∫W u²), the attraction threshold β̄ and
//! the strong-coupling constant 𝒟̃ = inf (‖u_i‖²_{λ_i} + ‖u_j‖²_{λ_j})² / (8∫u_i²u_j²).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{BandCholesky, BandedSym};
use crate::math::{abs, powi, sqrt};
use crate::model::{neg_laplacian, FieldVector, Grid};
use crate::scalar::solve_scalar_radial;

/// -Δ_h + λ as a banded matrix (zero ghost values).
pub fn shifted_laplacian(grid: &Grid, lambda: f64) -> BandedSym {
    let n = grid.len();
    let mut m = BandedSym::zeros(n, grid.stride(0).max(1));
    for node in 0..n {
        let idx = grid.unflatten(node);
        let mut d = lambda;
        for a in 0..grid.n {
            let ih2 = 1.0 / (grid.spacing[a] * grid.spacing[a]);
            d += 2.0 * ih2;
            if idx[a] + 1 < grid.points[a] {
                m.add(node + grid.stride(a), node, -ih2);
            }
        }
        m.add(node, node, d);
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientResult {
    pub value: f64,
    /// Minimizer, normalized to ∫W v² = 1 (grid quadrature).
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Smallest ρ with (-Δ + λ) v = ρ W v, by inverse iteration.
pub fn min_weighted_quotient(grid: &Grid, weight: &[f64], lambda: f64) -> Result<QuotientResult> {
    let n = grid.len();
    if weight.len() != n {
        return Err(Error::DimensionMismatch(format!("weight has {} values, grid has {n}", weight.len())));
    }
    if weight.iter().any(|w| *w < 0.0 || !w.is_finite()) || weight.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidSpec("weight must be nonnegative and not identically zero".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidSpec("λ must be positive".into()));
    }
    let m = shifted_laplacian(grid, lambda);
    let chol = BandCholesky::new(&m)?;
    let dv = grid.cell_volume();
    let mut v: Vec<f64> = weight.iter().map(|w| sqrt(*w)).collect();
    let mut mv = vec![0.0; n];
    let mut rho = f64::INFINITY;
    for it in 0..20_000 {
        let mut y: Vec<f64> = v.iter().zip(weight).map(|(a, w)| a * w).collect();
        chol.solve_in_place(&mut y);
        let wn = sqrt(dv * y.iter().zip(weight).map(|(a, w)| a * a * w).sum::<f64>());
        for a in y.iter_mut() {
            *a /= wn;
        }
        v = y;
        m.matvec(&v, &mut mv);
        let new = dv * dot(&v, &mv);
        let change = abs(new - rho);
        rho = new;
        if change <= 1e-15 * rho {
            let r: f64 = mv.iter().zip(&v).zip(weight).map(|((a, b), w)| (a - rho * w * b) * (a - rho * w * b)).sum();
            let residual = sqrt(r) / sqrt(dot(&mv, &mv));
            return Ok(QuotientResult { value: rho, minimizer: v, iterations: it + 1, residual });
        }
    }
    Err(Error::EigenNonConvergence(format!("inverse iteration stalled at ρ = {rho}")))
}

/// ρ̂ = inf ‖u‖²_λ / ∫(φ_i² + φ_j²)u² for two profiles sampled on `grid`.
pub fn rho_hat(grid: &Grid, phi_i: &[f64], phi_j: &[f64], lambda_l: f64) -> Result<f64> {
    if phi_i.len() != phi_j.len() {
        return Err(Error::DimensionMismatch("profiles differ in length".into()));
    }
    let w: Vec<f64> = phi_i.iter().zip(phi_j).map(|(a, b)| a * a + b * b).collect();
    Ok(min_weighted_quotient(grid, &w, lambda_l)?.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaBar {
    pub value: f64,
    /// inf ‖u‖²_{λ₂} / ∫w₁²u²
    pub first: f64,
    /// inf ‖u‖²_{λ₁} / ∫w₂²u²
    pub second: f64,
}

/// Attraction threshold for a pair: max{inf ‖u‖²_{λ₂}/∫w₁²u², inf ‖u‖²_{λ₁}/∫w₂²u²}, with w_j the
/// scalar soliton of (λ_j, μ_j) sampled on `grid` (N = grid.n).
pub fn beta_bar(grid: &Grid, lambda: [f64; 2], mu: [f64; 2]) -> Result<BetaBar> {
    let mut w = Vec::new();
    let hmin = grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut r2 = 0.0;
    for a in 0..grid.n {
        r2 += grid.extent[a] * grid.extent[a];
    }
    for j in 0..2 {
        let s = solve_scalar_radial(lambda[j], mu[j], grid.n, (sqrt(r2) + 2.0 * hmin).max(40.0 / sqrt(lambda[j])), hmin.min(0.01))?;
        let vals: Vec<f64> = (0..grid.len())
            .map(|node| {
                let m = grid.unflatten(node);
                let mut rr = 0.0;
                for a in 0..grid.n {
                    let x = grid.coord(a, m[a]);
                    rr += x * x;
                }
                let v = s.profile.value_at(sqrt(rr));
                v * v
            })
            .collect();
        w.push(vals);
    }
    let first = min_weighted_quotient(grid, &w[0], lambda[1])?.value;
    let second = min_weighted_quotient(grid, &w[1], lambda[0])?.value;
    Ok(BetaBar { value: first.max(second), first, second })
}

/// Smallest ρ of the radial problem (-Δ + λ)v = ρ f(|x|) v in ℝ^N, on r_m = mΔr with v'(0) = 0
/// and v(R) = 0. For radially nonincreasing f the minimizer is radial, so this equals the
/// full-space infimum.
pub fn radial_weighted_quotient(n: usize, dr: f64, f: &[f64], lambda: f64) -> Result<f64> {
    let len = f.len();
    if len < 10 || !(dr > 0.0) || !(1..=3).contains(&n) {
        return Err(Error::InvalidGrid("radial quotient needs N in 1..=3, dr > 0 and 10+ nodes".into()));
    }
    let rad = crate::solver::ansatz::Radial::new(n, dr, len, 8);
    let fac = rad.factor(lambda)?;
    let wf: Vec<f64> = rad.weight.iter().zip(f).map(|(a, b)| a * b).collect();
    let mut v: Vec<f64> = f.iter().map(|x| sqrt(x.max(0.0))).collect();
    let mut rho = f64::INFINITY;
    for _ in 0..20_000 {
        let mut y: Vec<f64> = v.iter().zip(&wf).map(|(a, b)| a * b).collect();
        fac.solve_in_place(&mut y);
        let nw = sqrt(y.iter().zip(&wf).map(|(a, b)| a * a * b).sum::<f64>());
        for a in y.iter_mut() {
            *a /= nw;
        }
        v = y;
        let new = dot(&v, &rad.apply(&v, lambda));
        let change = abs(new - rho);
        rho = new;
        if change <= 1e-15 * rho {
            return Ok(rho);
        }
    }
    Err(Error::EigenNonConvergence(format!("radial inverse iteration stalled at ρ = {rho}")))
}

/// β̄ from radial profiles: the scalar solitons are evaluated on r_m = mΔr up to `extent`.
pub fn beta_bar_radial(n: usize, lambda: [f64; 2], mu: [f64; 2], extent: f64, dr: f64) -> Result<BetaBar> {
    let len = (extent / dr) as usize + 1;
    let mut f = Vec::new();
    for j in 0..2 {
        let s = solve_scalar_radial(lambda[j], mu[j], n, extent.max(40.0 / sqrt(lambda[j])), dr.min(0.01))?;
        f.push((0..len).map(|m| powi(s.profile.value_at(m as f64 * dr), 2)).collect::<Vec<f64>>());
    }
    let first = radial_weighted_quotient(n, dr, &f[0], lambda[1])?;
    let second = radial_weighted_quotient(n, dr, &f[1], lambda[0])?;
    Ok(BetaBar { value: first.max(second), first, second })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DTilde {
    pub value: f64,
    /// Minimizing pair, scaled so that ‖u_i‖²_{λ_i} + ‖u_j‖²_{λ_j} = 1.
    pub fields: FieldVector,
    pub iterations: usize,
    /// Relative change of the quotient over the last iteration.
    pub last_change: f64,
}

/// S and P of the strong-coupling quotient, together with M_j u_j.
fn dt_parts(grid: &Grid, lam: [f64; 2], u: &[Vec<f64>; 2]) -> (f64, f64, [Vec<f64>; 2]) {
    let dv = grid.cell_volume();
    let n = grid.len();
    let mut mu = [vec![0.0; n], vec![0.0; n]];
    let mut s = 0.0;
    for c in 0..2 {
        neg_laplacian(grid, &u[c], &mut mu[c]);
        for (y, x) in mu[c].iter_mut().zip(&u[c]) {
            *y += lam[c] * x;
        }
        s += dv * dot(&u[c], &mu[c]);
    }
    let p = dv * u[0].iter().zip(&u[1]).map(|(a, b)| a * a * b * b).sum::<f64>();
    (s, p, mu)
}

/// Strong-coupling quotient Q(u_i, u_j) = (‖u_i‖²_{λ_i} + ‖u_j‖²_{λ_j})² / (8∫u_i²u_j²).
pub fn strong_coupling_quotient(grid: &Grid, lambda: [f64; 2], ui: &[f64], uj: &[f64]) -> f64 {
    let (s, p, _) = dt_parts(grid, lambda, &[ui.to_vec(), uj.to_vec()]);
    s * s / (8.0 * p)
}

/// 𝒟̃(λ_i, λ_j) by preconditioned, normalized descent from a symmetric sech² seed.
pub fn d_tilde(lambda_i: f64, lambda_j: f64, grid: &Grid) -> Result<DTilde> {
    if !(lambda_i > 0.0 && lambda_j > 0.0) {
        return Err(Error::InvalidSpec("λ must be positive".into()));
    }
    let lam = [lambda_i, lambda_j];
    let n = grid.len();
    let pre = [BandCholesky::new(&shifted_laplacian(grid, lambda_i))?, BandCholesky::new(&shifted_laplacian(grid, lambda_j))?];
    let seed: Vec<f64> = (0..n)
        .map(|node| {
            let m = grid.unflatten(node);
            let mut rr = 0.0;
            for a in 0..grid.n {
                let x = grid.coord(a, m[a]);
                rr += x * x;
            }
            crate::math::sech(sqrt(rr))
        })
        .collect();
    let mut u = [seed.clone(), seed];
    let normalize = |u: &mut [Vec<f64>; 2]| {
        let (s, _, _) = dt_parts(grid, lam, u);
        let f = 1.0 / sqrt(s);
        for c in u.iter_mut() {
            for x in c.iter_mut() {
                *x *= f;
            }
        }
    };
    normalize(&mut u);
    let (mut s, mut p, _) = dt_parts(grid, lam, &u);
    let mut q = s * s / (8.0 * p);
    let mut step = 0.5;
    let mut last_change = f64::INFINITY;
    for it in 0..20_000 {
        // preconditioned gradient: (S/2P) u_c - (S²/4P²) M_c⁻¹ (u_c u_other²)
        let mut d = [vec![0.0; n], vec![0.0; n]];
        for c in 0..2 {
            let o = 1 - c;
            let mut y: Vec<f64> = u[c].iter().zip(&u[o]).map(|(a, b)| a * b * b).collect();
            pre[c].solve_in_place(&mut y);
            for ((dv, a), yv) in d[c].iter_mut().zip(&u[c]).zip(&y) {
                *dv = s / (2.0 * p) * a - s * s / (4.0 * p * p) * yv;
            }
        }
        let mut accepted = false;
        let mut a = step;
        for _ in 0..60 {
            let mut trial = u.clone();
            for c in 0..2 {
                for (x, dx) in trial[c].iter_mut().zip(&d[c]) {
                    *x -= a * dx;
                }
            }
            normalize(&mut trial);
            let (s2, p2, _) = dt_parts(grid, lam, &trial);
            let q2 = s2 * s2 / (8.0 * p2);
            if q2.is_finite() && q2 <= q {
                last_change = (q - q2) / q;
                u = trial;
                s = s2;
                p = p2;
                q = q2;
                accepted = true;
                step = (a * 1.5).min(1e3);
                break;
            }
            a *= 0.5;
        }
        if !q.is_finite() {
            return Err(Error::FlowDivergence(format!("quotient became {q} at iteration {it}")));
        }
        if !accepted || last_change < 1e-14 {
            let fields = FieldVector::new(grid.clone(), u.to_vec())?;
            return Ok(DTilde { value: q, fields, iterations: it + 1, last_change });
        }
    }
    Err(Error::FlowDivergence(format!("no convergence after 20000 steps; last quotient {q}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sech;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Dense oracle: 1/ρ is the largest eigenvalue of L⁻¹ W L⁻ᵀ with M = LLᵀ.
    fn dense_rho(grid: &Grid, w: &[f64], lambda: f64) -> f64 {
        let n = grid.len();
        let h = grid.spacing[0];
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 / (h * h) + lambda
            } else if i.abs_diff(j) == 1 {
                -1.0 / (h * h)
            } else {
                0.0
            }
        });
        let l = m.cholesky().unwrap().l();
        let li = l.try_inverse().unwrap();
        let wm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(w));
        let c = &li * wm * li.transpose();
        let top = SymmetricEigen::new(c).eigenvalues.max();
        1.0 / top
    }

    #[test]
    fn inverse_iteration_matches_dense_oracle() {
        let g = Grid::line(10.0, 0.05).unwrap(); // 401 nodes
        let xs = g.axis_coords(0);
        let pi: Vec<f64> = xs.iter().map(|&x| 1.5 * sech(x - 0.7)).collect();
        let pj: Vec<f64> = xs.iter().map(|&x| sech(1.3 * (x + 0.4))).collect();
        let w: Vec<f64> = pi.iter().zip(&pj).map(|(a, b)| a * a + b * b).collect();
        for lam in [0.5, 1.0, 2.5] {
            let r = rho_hat(&g, &pi, &pj, lam).unwrap();
            let d = dense_rho(&g, &w, lam);
            assert!((r - d).abs() < 1e-6 * d, "{r} {d}");
        }
    }

    #[test]
    fn weight_scaling_and_monotonicity() {
        let g = Grid::line(10.0, 0.05).unwrap();
        let xs = g.axis_coords(0);
        let w: Vec<f64> = xs.iter().map(|&x| sech(x) * sech(x)).collect();
        let r1 = min_weighted_quotient(&g, &w, 1.0).unwrap().value;
        let w4: Vec<f64> = w.iter().map(|v| 4.0 * v).collect();
        let r4 = min_weighted_quotient(&g, &w4, 1.0).unwrap().value;
        assert!((r4 * 4.0 - r1).abs() < 1e-10 * r1);
        let wb: Vec<f64> = xs.iter().zip(&w).map(|(&x, v)| v + 0.1 * sech(x - 2.0)).collect();
        assert!(min_weighted_quotient(&g, &wb, 1.0).unwrap().value < r1);
    }

    #[test]
    fn soliton_weight_quotient_is_one() {
        // with W = w² for the λ=μ=1 soliton, w itself attains ρ = 1; it is the ground state of
        // -Δ + 1 - ρ w², which is positive, so the infimum is exactly 1 (up to O(h²))
        let g = Grid::line(20.0, 0.02).unwrap();
        let w: Vec<f64> = g.axis_coords(0).iter().map(|&x| 2.0 * sech(x) * sech(x)).collect();
        let r = min_weighted_quotient(&g, &w, 1.0).unwrap().value;
        assert!((r - 1.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn beta_bar_poschl_teller_pair() {
        // w₁² = 2sech²x for λ₁ = 1; the λ₂ = 2 quotient is ν(ν+1)/2 with ν = √2 (Pöschl–Teller)
        let g = Grid::line(20.0, 0.01).unwrap();
        let b = beta_bar(&g, [1.0, 2.0], [1.0, 1.0]).unwrap();
        let exact = (2.0 + 2f64.sqrt()) / 2.0;
        assert!((b.first - exact).abs() < 1e-4, "{b:?}");
        assert!(b.second < b.first);
        assert!((b.value - exact).abs() < 1e-4);
    }

    #[test]
    fn radial_reduction_agrees_with_the_line_grid() {
        let b = beta_bar_radial(1, [1.0, 2.0], [1.0, 1.0], 20.0, 0.01).unwrap();
        let exact = (2.0 + 2f64.sqrt()) / 2.0;
        assert!((b.first - exact).abs() < 1e-4, "{b:?}");
        // N = 3: the quotient of a soliton against its own weight is 1 (w solves -Δw + λw = μw³)
        let s = solve_scalar_radial(1.0, 1.0, 3, 30.0, 0.01).unwrap();
        let f: Vec<f64> = (0..2001).map(|m| s.profile.value_at(m as f64 * 0.01).powi(2)).collect();
        let r = radial_weighted_quotient(3, 0.01, &f, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn d_tilde_equal_rates_hits_the_soliton_bound() {
        let g = Grid::line(15.0, 0.02).unwrap();
        let d = d_tilde(1.0, 1.0, &g).unwrap();
        assert!(d.value <= 8.0 / 3.0 + 1e-4, "{d:?}");
        assert!(d.value > 8.0 / 3.0 - 1e-3);
        let a = d_tilde(1.0, 2.0, &g).unwrap().value;
        let b = d_tilde(2.0, 1.0, &g).unwrap().value;
        assert!((a - b).abs() < 1e-8 * a);
    }
}
