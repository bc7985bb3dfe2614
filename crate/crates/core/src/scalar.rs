//! Positive radial solutions of -Δw + λw = μw³ on ℝ^N.
//!
//! N = 1 uses the closed form w = √(2λ/μ) sech(√λ x). For N = 2, 3 the radial ODE
//! is shot from w(0) (bisection on the far-field behaviour) and the exponentially small
//! tail is replaced by the decaying solution of the linearized equation, integrated
//! backward from the far end and matched in value.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{lstsq, TriFactor};
use crate::math::{abs, ceil, exp, floor, ln, powi, sech, sqrt, tanh};
use crate::model::Grid;

/// Radial grid function w(r_i), r_i = i·h, with its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: usize,
    pub h: f64,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
}

impl RadialProfile {
    pub fn r_max(&self) -> f64 {
        (self.w.len() - 1) as f64 * self.h
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.w.len()).map(|i| i as f64 * self.h).collect()
    }

    /// Cubic Hermite interpolation from (w, w'); zero beyond the last node.
    pub fn value_at(&self, r: f64) -> f64 {
        let r = abs(r);
        let t = r / self.h;
        let i = t as usize;
        if i + 1 >= self.w.len() {
            return if i + 1 == self.w.len() && t == i as f64 { self.w[i] } else { 0.0 };
        }
        let s = t - i as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.w[i] + h10 * self.h * self.dw[i] + h01 * self.w[i + 1] + h11 * self.h * self.dw[i + 1]
    }

    /// ∫_{ℝ^N} f(|x|) dx for a radial integrand sampled on this profile's nodes.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        radial_integral(self.n, self.h, f)
    }

    /// Copy with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            h: self.h,
            w: self.w.iter().map(|v| v * c).collect(),
            dw: self.dw.iter().map(|v| v * c).collect(),
        }
    }
}

/// ∫_{ℝ^N} f(|x|) dx from samples f(i·h).
///
/// N = 1 and N = 3 use the trapezoidal rule, which is spectrally accurate for the even
/// extensions of f and r²f. N = 2 integrates the odd function r·f with Simpson's rule.
pub fn radial_integral(n: usize, h: f64, f: &[f64]) -> f64 {
    let m = f.len();
    if m == 0 {
        return 0.0;
    }
    match n {
        1 => h * (f[0] + 2.0 * f[1..].iter().sum::<f64>() - f[m - 1]),
        3 => {
            let s: f64 = f.iter().enumerate().map(|(i, v)| powi(i as f64 * h, 2) * v).sum();
            let last = powi((m - 1) as f64 * h, 2) * f[m - 1];
            4.0 * core::f64::consts::PI * h * (s - 0.5 * last)
        }
        _ => {
            let g: Vec<f64> = f.iter().enumerate().map(|(i, v)| i as f64 * h * v).collect();
            2.0 * core::f64::consts::PI * simpson(&g, h)
        }
    }
}

/// Composite Simpson on uniform samples; an even sample count ends with a 3/8 panel.
pub fn simpson(g: &[f64], h: f64) -> f64 {
    let m = g.len();
    match m {
        0 | 1 => 0.0,
        2 => 0.5 * h * (g[0] + g[1]),
        3 => h / 3.0 * (g[0] + 4.0 * g[1] + g[2]),
        _ => {
            let (end, tail) = if m % 2 == 1 { (m, 0.0) } else { (m - 3, 3.0 * h / 8.0 * (g[m - 4] + 3.0 * g[m - 3] + 3.0 * g[m - 2] + g[m - 1])) };
            let mut s = g[0] + g[end - 1];
            for (i, v) in g.iter().enumerate().take(end - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0 + tail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMethod {
    ClosedForm,
    Shooting,
    Relaxation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSoliton {
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
    pub profile: RadialProfile,
    pub method: ScalarMethod,
    /// ‖w‖₂², ‖w‖₄⁴ and ‖w‖²_λ = ∫|∇w|² + λw².
    pub norm2: f64,
    pub norm4: f64,
    pub norm_lambda: f64,
    pub energy: f64,
    /// Radius (physical units) where the shot solution hands over to the linear tail.
    pub match_radius: Option<f64>,
}

impl ScalarSoliton {
    pub fn w0(&self) -> f64 {
        self.profile.w[0]
    }

    pub fn decay_length(&self) -> f64 {
        1.0 / sqrt(self.lambda)
    }
}

/// Solve the scalar field equation on the radial half of `grid` (axis 0: r ∈ [0, L]).
pub fn solve_scalar(lambda: f64, mu: f64, n: usize, grid: &Grid) -> Result<ScalarSoliton> {
    solve_scalar_radial(lambda, mu, n, grid.extent[0], grid.spacing[0])
}

/// As [`solve_scalar`] with the radial extent and spacing given directly.
pub fn solve_scalar_radial(lambda: f64, mu: f64, n: usize, extent: f64, h: f64) -> Result<ScalarSoliton> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(Error::InvalidSpec("lambda and mu must be positive".into()));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidSpec("N must be 1, 2 or 3".into()));
    }
    if !(h > 0.0 && extent > h) {
        return Err(Error::InvalidGrid("radial extent must exceed the spacing".into()));
    }
    let m = (extent / h + 1e-9) as usize + 1;
    let amp = sqrt(lambda / mu);
    let sl = sqrt(lambda);
    let (profile, method, match_radius) = if n == 1 {
        let mut w = vec![0.0; m];
        let mut dw = vec![0.0; m];
        for i in 0..m {
            let x = sl * i as f64 * h;
            let s = sech(x);
            w[i] = amp * core::f64::consts::SQRT_2 * s;
            dw[i] = -amp * core::f64::consts::SQRT_2 * sl * s * tanh(x);
        }
        (RadialProfile { n, h, w, dw }, ScalarMethod::ClosedForm, None)
    } else {
        // unit problem on the rescaled grid, then w = √(λ/μ) ŵ(√λ r)
        match shoot_unit(n, h * sl, m) {
            Ok((w, dw, rm)) => {
                let w = w.iter().map(|v| amp * v).collect();
                let dw = dw.iter().map(|v| amp * sl * v).collect();
                (RadialProfile { n, h, w, dw }, ScalarMethod::Shooting, Some(rm / sl))
            }
            Err(Error::ShootingBracket { .. }) => {
                let (w, dw) = relax_unit(n, h * sl, m)?;
                let w = w.iter().map(|v| amp * v).collect();
                let dw = dw.iter().map(|v| amp * sl * v).collect();
                (RadialProfile { n, h, w, dw }, ScalarMethod::Relaxation, None)
            }
            Err(e) => return Err(e),
        }
    };
    let ratio = profile.w[m - 1] / profile.w[0];
    if ratio > 1e-10 {
        return Err(Error::GridTooSmall { ratio });
    }
    let w2: Vec<f64> = profile.w.iter().map(|v| v * v).collect();
    let w4: Vec<f64> = w2.iter().map(|v| v * v).collect();
    let grad2: Vec<f64> = profile.dw.iter().map(|v| v * v).collect();
    let norm2 = profile.integrate(&w2);
    let norm4 = profile.integrate(&w4);
    let norm_lambda = profile.integrate(&grad2) + lambda * norm2;
    let energy = 0.5 * norm_lambda - 0.25 * mu * norm4;
    Ok(ScalarSoliton { lambda, mu, n, profile, method, norm2, norm4, norm_lambda, energy, match_radius })
}

/// λ‖w‖₂² - ((4-N)μ/4)‖w‖₄⁴.
pub fn pohozaev_residual(s: &ScalarSoliton) -> f64 {
    s.lambda * s.norm2 - (4.0 - s.n as f64) * s.mu / 4.0 * s.norm4
}

/// Max-norm residual of w'' + (N-1)/r w' - λw + μw³ on interior nodes, with w''
/// from an eighth-order central difference of the stored w'.
pub fn equation_residual(s: &ScalarSoliton) -> f64 {
    let p = &s.profile;
    let m = p.w.len();
    let h = p.h;
    let dw = |i: isize| -> f64 {
        if i < 0 {
            -p.dw[(-i) as usize]
        } else {
            p.dw[i as usize]
        }
    };
    let c = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let mut worst: f64 = 0.0;
    // skip the outer 10% where the profile is at the level of round-off
    for i in 0..(m * 9 / 10).saturating_sub(4) {
        let ii = i as isize;
        let d2 = (1..=4).map(|o| c[o - 1] * (dw(ii + o as isize) - dw(ii - o as isize))).sum::<f64>() / h;
        let r = i as f64 * h;
        let radial = if i == 0 { (s.n as f64 - 1.0) * d2 } else { (s.n as f64 - 1.0) / r * p.dw[i] };
        let w = p.w[i];
        let res = d2 + radial - s.lambda * w + s.mu * w * w * w;
        worst = worst.max(abs(res));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// c in w ≈ c·r^{-(N-1)/2}·e^{-√λ r}.
    pub amplitude: f64,
    /// Fitted exponential rate (should equal √λ).
    pub rate: f64,
    /// RMS residual of the constant fit of log w + √λ r + ((N-1)/2) log r.
    pub residual: f64,
}

/// Tail amplitude from the window r ∈ [4/√λ, 8/√λ].
pub fn tail_amplitude(s: &ScalarSoliton) -> Result<TailFit> {
    let sl = sqrt(s.lambda);
    let (lo, hi) = (4.0 / sl, 8.0 / sl);
    if hi > s.profile.r_max() {
        return Err(Error::WindowOutsideRange { lo, hi });
    }
    let h = s.profile.h;
    let i0 = ceil(lo / h) as usize;
    let i1 = floor(hi / h) as usize;
    let half = (s.n as f64 - 1.0) / 2.0;
    let mut ys = Vec::new();
    let mut design = Vec::new();
    let mut yr = Vec::new();
    for i in i0..=i1 {
        let r = i as f64 * h;
        let y = ln(s.profile.w[i]) + half * ln(r);
        ys.push(y + sl * r);
        design.extend_from_slice(&[1.0, -r]);
        yr.push(y);
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let residual = sqrt(ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / ys.len() as f64);
    if residual > 1e-2 {
        return Err(Error::FitResidual(residual));
    }
    let (coef, _) = lstsq(&design, &yr, 2)?;
    Ok(TailFit { amplitude: exp(mean), rate: coef[1], residual })
}

enum Shot {
    Over,
    Under,
    Reached,
}

/// Integrate ŵ'' = -(N-1)/r ŵ' + ŵ - ŵ³ from ŵ(0) = a; returns nodal (w, w') up to the
/// first sign change of w (Over) or of w' (Under).
fn shoot(n: usize, a: f64, h: f64, m: usize, sub: usize) -> (Shot, Vec<f64>, Vec<f64>) {
    let nm1 = n as f64 - 1.0;
    let f = |r: f64, w: f64, v: f64| -> (f64, f64) {
        let acc = if r == 0.0 { (w - w * w * w) / n as f64 } else { -nm1 / r * v + w - w * w * w };
        (v, acc)
    };
    let dt = h / sub as f64;
    let mut ws = vec![a];
    let mut vs = vec![0.0];
    let (mut w, mut v) = (a, 0.0);
    for i in 0..m - 1 {
        for s in 0..sub {
            let r = i as f64 * h + s as f64 * dt;
            let (k1w, k1v) = f(r, w, v);
            let (k2w, k2v) = f(r + 0.5 * dt, w + 0.5 * dt * k1w, v + 0.5 * dt * k1v);
            let (k3w, k3v) = f(r + 0.5 * dt, w + 0.5 * dt * k2w, v + 0.5 * dt * k2v);
            let (k4w, k4v) = f(r + dt, w + dt * k3w, v + dt * k3v);
            w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if w < 0.0 {
                return (Shot::Over, ws, vs);
            }
            if v > 0.0 {
                return (Shot::Under, ws, vs);
            }
        }
        ws.push(w);
        vs.push(v);
    }
    (Shot::Reached, ws, vs)
}

/// Unit problem (λ = μ = 1) on nodes i·h, i < m. Returns (w, w', match radius).
fn shoot_unit(n: usize, h: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let sub = (ceil(h / 0.00025) as usize).max(2);
    // shooting only needs to reach the break-away radius
    let m_shoot = m.min((40.0 / h) as usize + 2);
    let mut lo = 0.5;
    let mut hi = 2.0;
    loop {
        match shoot(n, hi, h, m_shoot, sub).0 {
            Shot::Over => break,
            _ => {
                lo = hi;
                hi *= 2.0;
                if hi > 1e4 {
                    return Err(Error::ShootingBracket { lo: 0.5, hi });
                }
            }
        }
    }
    if !matches!(shoot(n, lo, h, m_shoot, sub).0, Shot::Under) {
        return Err(Error::ShootingBracket { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        match shoot(n, mid, h, m_shoot, sub).0 {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Reached => {
                lo = mid;
                hi = mid;
            }
        }
    }
    if hi - lo > 1e-12 * hi {
        return Err(Error::ShootingBracket { lo, hi });
    }
    let (_, wl, vl) = shoot(n, lo, h, m_shoot, sub);
    let (_, wh, vh) = shoot(n, hi, h, m_shoot, sub);
    let common = wl.len().min(wh.len());
    // match where the two bracketing shots still agree closely and w is far above
    // the resolution of the bracket
    let mut im = 0;
    for i in 1..common {
        let wm = 0.5 * (wl[i] + wh[i]);
        if abs(wl[i] - wh[i]) <= 1e-9 * wm {
            im = i;
        } else {
            break;
        }
    }
    let im = im.min(m - 1);
    if im < 2 {
        return Err(Error::ShootingBracket { lo, hi });
    }
    let mut w = vec![0.0; m];
    let mut dw = vec![0.0; m];
    for i in 0..=im {
        w[i] = 0.5 * (wl[i] + wh[i]);
        dw[i] = 0.5 * (vl[i] + vh[i]);
    }
    if im + 1 < m {
        let (tw, tv) = linear_tail(n, h, im, m, sub);
        let c = w[im] / tw[0];
        for i in im + 1..m {
            w[i] = c * tw[i - im];
            dw[i] = c * tv[i - im];
        }
    }
    Ok((w, dw, im as f64 * h))
}

/// Decaying solution of ŵ'' + (N-1)/r ŵ' - ŵ = 0 on nodes im..m, integrated backward
/// (the decaying mode grows in that direction, so the integration is stable).
fn linear_tail(n: usize, h: f64, im: usize, m: usize, sub: usize) -> (Vec<f64>, Vec<f64>) {
    let nm1 = n as f64 - 1.0;
    let len = m - im;
    // start no more than ~600 units out so the values stay representable
    let end = (len - 1).min((600.0 / h) as usize);
    let r_end = (im + end) as f64 * h;
    let mut w = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut cw = 1e-280_f64.max(f64::MIN_POSITIVE * 1e10);
    let mut cv = -(1.0 + nm1 / (2.0 * r_end)) * cw;
    w[end] = cw;
    v[end] = cv;
    let f = |r: f64, w: f64, v: f64| (v, -nm1 / r * v + w);
    let dt = -h / sub as f64;
    for j in (0..end).rev() {
        for s in 0..sub {
            let r = (im + j + 1) as f64 * h + s as f64 * dt;
            let (k1w, k1v) = f(r, cw, cv);
            let (k2w, k2v) = f(r + 0.5 * dt, cw + 0.5 * dt * k1w, cv + 0.5 * dt * k1v);
            let (k3w, k3v) = f(r + 0.5 * dt, cw + 0.5 * dt * k2w, cv + 0.5 * dt * k2v);
            let (k4w, k4v) = f(r + dt, cw + dt * k3w, cv + dt * k3v);
            cw += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            cv += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        w[j] = cw;
        v[j] = cv;
        if cw > 1e250 {
            let s = 1e-250;
            for t in j..=end {
                w[t] *= s;
                v[t] *= s;
            }
            cw *= s;
            cv *= s;
        }
    }
    (w, v)
}

/// Fallback: Petviashvili iteration for the unit problem on a cell-centered radial grid,
/// sampled back onto the nodes i·h by cubic interpolation.
fn relax_unit(n: usize, h: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nm1 = n as i32 - 1;
    let rc: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
    let face = |i: usize| powi((i + 1) as f64 * h, nm1);
    let omega: Vec<f64> = rc.iter().map(|r| powi(*r, nm1) * h * h).collect();
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m - 1];
    for i in 0..m {
        let left = if i == 0 { 0.0 } else { face(i - 1) };
        diag[i] = left + face(i) + omega[i];
        if i + 1 < m {
            off[i] = -face(i);
        }
    }
    let op = TriFactor::new(&diag, &off)?;
    let mut w: Vec<f64> = rc.iter().map(|&r| 2.0 * sech(r)).collect();
    let mut converged = false;
    for _ in 0..5000 {
        let nl: Vec<f64> = w.iter().map(|v| v * v * v).collect();
        let mut lw = vec![0.0; m];
        for i in 0..m {
            lw[i] = diag[i] * w[i] + if i > 0 { off[i - 1] * w[i - 1] } else { 0.0 } + if i + 1 < m { off[i] * w[i + 1] } else { 0.0 };
        }
        let num: f64 = w.iter().zip(&lw).map(|(a, b)| a * b).sum();
        let den: f64 = w.iter().zip(&nl).zip(&omega).map(|((a, b), o)| a * b * o).sum();
        let stab = num / den;
        let mut next: Vec<f64> = nl.iter().zip(&omega).map(|(v, o)| v * o).collect();
        op.solve_in_place(&mut next);
        let f = stab * sqrt(stab);
        for v in next.iter_mut() {
            *v *= f;
        }
        let diff = next.iter().zip(&w).map(|(a, b)| abs(a - b)).fold(0.0, f64::max);
        w = next;
        if diff < 1e-13 * w[0] {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FlowDivergence("radial relaxation did not converge".into()));
    }
    let value = |r: f64| -> f64 {
        // cubic Lagrange through four cell centers, even reflection at the origin
        let t = r / h - 0.5;
        let i = floor(t) as isize;
        let s = t - i as f64;
        let at = |j: isize| -> f64 {
            let j = if j < 0 { -j - 1 } else { j };
            w.get(j as usize).copied().unwrap_or(0.0)
        };
        let (a, b, c, d) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        b + 0.5 * s * (c - a + s * (2.0 * a - 5.0 * b + 4.0 * c - d + s * (3.0 * (b - c) + d - a)))
    };
    let wn: Vec<f64> = (0..m).map(|i| value(i as f64 * h)).collect();
    let mut dw = vec![0.0; m];
    for i in 1..m - 1 {
        dw[i] = (wn[i + 1] - wn[i - 1]) / (2.0 * h);
    }
    dw[m - 1] = -wn[m - 1];
    Ok((wn, dw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_anchor() {
        let g = Grid::line(40.0, 0.01).unwrap();
        let s = solve_scalar(1.0, 1.0, 1, &g).unwrap();
        assert!((s.w0() - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.energy - 4.0 / 3.0).abs() < 1e-10);
        assert!((s.norm2 - 4.0).abs() < 1e-10);
        assert!((s.norm4 - 16.0 / 3.0).abs() < 1e-10);
        assert!(pohozaev_residual(&s).abs() < 1e-9);
        assert!(equation_residual(&s) < 1e-8, "{}", equation_residual(&s));
    }

    #[test]
    fn scaling_law() {
        let base = solve_scalar_radial(1.0, 1.0, 3, 40.0, 0.02).unwrap();
        let (l, mu) = (4.0, 2.5);
        let s = solve_scalar_radial(l, mu, 3, 20.0, 0.01).unwrap();
        // s(r_i) with r_i = 0.01 i corresponds to base at 2·r_i = 0.02 i
        for i in (0..1500).step_by(37) {
            let expect = (l / mu).sqrt() * base.profile.w[i];
            assert!((s.profile.w[i] - expect).abs() < 1e-8 * base.w0());
        }
    }

    #[test]
    fn shot_profiles_are_monotone_and_satisfy_identities() {
        for n in [2, 3] {
            let s = solve_scalar_radial(1.0, 1.0, n, 40.0, 0.01).unwrap();
            assert_eq!(s.method, ScalarMethod::Shooting);
            assert!(s.profile.w.windows(2).all(|p| p[1] < p[0] || p[1] == 0.0));
            assert!(pohozaev_residual(&s).abs() <= 1e-6 * s.lambda * s.norm2);
            assert!((s.energy - 0.25 * s.norm_lambda).abs() <= 1e-8 * s.energy.abs());
            assert!(equation_residual(&s) < 1e-8, "N={n}: {}", equation_residual(&s));
        }
    }

    #[test]
    fn relaxation_fallback_agrees_with_shooting() {
        let shot = solve_scalar_radial(1.0, 1.0, 3, 30.0, 0.01).unwrap();
        let errs: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&h| {
                let m = (30.0 / h) as usize + 1;
                let (w, _) = relax_unit(3, h, m).unwrap();
                (w[0] - shot.w0()).abs()
            })
            .collect();
        // second order on the cell-centered grid
        assert!(errs[1] < 1e-3 * shot.w0());
        let ratio = errs[0] / errs[1];
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn tail_fit() {
        let g = Grid::line(40.0, 0.01).unwrap();
        let s = solve_scalar(1.0, 1.0, 1, &g).unwrap();
        let t = tail_amplitude(&s).unwrap();
        assert!((t.amplitude - 2.0 * 2f64.sqrt()).abs() < 0.01 * 2.0 * 2f64.sqrt());
        for l in [1.0, 2.0, 4.0] {
            let s = solve_scalar(l, 1.0, 1, &g).unwrap();
            let t = tail_amplitude(&s).unwrap();
            assert!((t.rate - l.sqrt()).abs() < 0.005 * l.sqrt());
        }
    }

    #[test]
    fn too_small_grid_is_reported() {
        let g = Grid::line(5.0, 0.01).unwrap();
        assert!(matches!(solve_scalar(1.0, 1.0, 1, &g), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let h = 0.1;
        for m in [5usize, 6, 7, 8] {
            let g: Vec<f64> = (0..m).map(|i| (i as f64 * h).powi(3)).collect();
            let exact = ((m - 1) as f64 * h).powi(4) / 4.0;
            assert!((simpson(&g, h) - exact).abs() < 1e-12);
        }
    }
}
