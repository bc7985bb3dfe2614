//! Overlap integrals ∫ p²(x) q²(x - R e₁) dx between radial profiles and the fit of their
//! decay in R.
//!
//! Separations are realized as integer multiples of the profile spacing, so no
//! interpolation noise enters the sweep in N = 1. In N = 2, 3 the integrand is evaluated
//! on an axis-aligned cylindrical (z, ρ) grid; both factors are tabulated once on that
//! grid and the shift is an index offset along z.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::math::{abs, ln, round, sqrt};
use crate::model::Grid;
use crate::scalar::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapValue {
    pub value: f64,
    pub r_requested: f64,
    /// Separation actually used (nearest multiple of the spacing).
    pub r: f64,
}

impl OverlapValue {
    pub fn rounding(&self) -> f64 {
        self.r - self.r_requested
    }
}

fn check_compatible(p: &RadialProfile, q: &RadialProfile) -> Result<()> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch("profiles live in different dimensions".into()));
    }
    if abs(p.h - q.h) > 1e-12 * p.h {
        return Err(Error::DimensionMismatch("profiles use different spacings".into()));
    }
    Ok(())
}

/// p², q² tabulated on the (z, ρ) quadrature grid.
struct Table {
    /// t[|i|*(cols) + l] = f²(√(z_i² + ρ_l²)).
    t: Vec<f64>,
    cols: usize,
    rows: usize,
}

impl Table {
    fn new(p: &RadialProfile, rows: usize, cols: usize) -> Self {
        let h = p.h;
        let mut t = vec![0.0; rows * cols];
        for i in 0..rows {
            let z = i as f64 * h;
            for l in 0..cols {
                let rho = l as f64 * h;
                let r = sqrt(z * z + rho * rho);
                let v = p.value_at(r);
                t[i * cols + l] = v * v;
            }
        }
        Self { t, cols, rows }
    }

    #[inline]
    fn get(&self, i: isize, l: usize) -> f64 {
        let a = i.unsigned_abs();
        if a >= self.rows {
            0.0
        } else {
            self.t[a * self.cols + l]
        }
    }
}

/// Reusable evaluator for one pair of profiles.
pub struct OverlapEvaluator<'a> {
    p: &'a RadialProfile,
    q: &'a RadialProfile,
    tables: Option<(Table, Table, Vec<f64>)>,
}

impl<'a> OverlapEvaluator<'a> {
    pub fn new(p: &'a RadialProfile, q: &'a RadialProfile) -> Result<Self> {
        check_compatible(p, q)?;
        let tables = if p.n == 1 {
            None
        } else {
            let h = p.h;
            let rows = p.w.len().max(q.w.len());
            let cols = rows;
            let tp = Table::new(p, rows, cols);
            let tq = Table::new(q, rows, cols);
            let mut wts = vec![0.0; cols];
            if p.n == 2 {
                // ρ ranges over ℝ; the integrand is even in ρ
                for (l, w) in wts.iter_mut().enumerate() {
                    *w = if l == 0 { h } else { 2.0 * h };
                }
            } else {
                // 2πρ dρ with Simpson weights (ρ·even is odd, so no spectral trapezoid)
                let simpson_w = simpson_weights(cols, h);
                for (l, w) in wts.iter_mut().enumerate() {
                    *w = 2.0 * core::f64::consts::PI * (l as f64 * h) * h * simpson_w[l];
                }
            }
            Some((tp, tq, wts))
        };
        Ok(Self { p, q, tables })
    }

    pub fn at(&self, r: f64) -> OverlapValue {
        let h = self.p.h;
        let s = round(r / h) as isize;
        let r_used = s as f64 * h;
        let value = match &self.tables {
            None => {
                let (p, q) = (&self.p.w, &self.q.w);
                let mp = p.len() as isize;
                let mq = q.len() as isize;
                let lo = (-mp + 1).max(s - mq + 1);
                let hi = (mp - 1).min(s + mq - 1);
                let mut acc = 0.0;
                for i in lo..=hi {
                    let a = p[i.unsigned_abs()];
                    let b = q[(i - s).unsigned_abs()];
                    acc += a * a * b * b;
                }
                h * acc
            }
            Some((tp, tq, wts)) => {
                let rows = tp.rows as isize;
                let mut acc = 0.0;
                for (l, &wl) in wts.iter().enumerate() {
                    if wl == 0.0 {
                        continue;
                    }
                    let mut line = 0.0;
                    for i in (-rows + 1).max(s - rows + 1)..=(rows - 1).min(s + rows - 1) {
                        line += tp.get(i, l) * tq.get(i - s, l);
                    }
                    acc += wl * line;
                }
                h * acc
            }
        };
        OverlapValue { value, r_requested: r, r: r_used }
    }
}

/// Simpson weights (without the factor h) on `m` uniform nodes; a 3/8 panel closes even counts.
fn simpson_weights(m: usize, _h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m];
    if m < 3 {
        for v in w.iter_mut() {
            *v = 0.5;
        }
        if m == 1 {
            w[0] = 0.0;
        }
        return w;
    }
    let end = if m % 2 == 1 { m } else { m - 3 };
    for (i, v) in w.iter_mut().enumerate().take(end) {
        *v = if i == 0 || i == end - 1 {
            1.0 / 3.0
        } else if i % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        };
    }
    if end < m {
        for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[m - 4 + o] += 3.0 / 8.0 * c;
        }
    }
    w
}

/// ∫ p²(x) q²(x - R e₁) dx.
pub fn overlap_integral(p: &RadialProfile, q: &RadialProfile, r: f64) -> Result<OverlapValue> {
    Ok(OverlapEvaluator::new(p, q)?.at(r))
}

/// ∫ p²(x) q²(x - s·h e₁) dx for fields on the same N = 1 grid, q shifted by `cells` nodes.
/// Fails when more than 10⁻⁸ of q's mass is pushed off the grid.
pub fn overlap_on_grid(grid: &Grid, p: &[f64], q: &[f64], cells: isize) -> Result<f64> {
    let n = grid.points[0] as isize;
    let total: f64 = q.iter().map(|v| v * v).sum();
    let mut lost = 0.0;
    let mut acc = 0.0;
    for j in 0..n {
        let i = j + cells;
        let b = q[j as usize];
        if i < 0 || i >= n {
            lost += b * b;
            continue;
        }
        let a = p[i as usize];
        acc += a * a * b * b;
    }
    if total > 0.0 && lost / total > 1e-8 {
        return Err(Error::SupportExitsGrid(lost / total));
    }
    Ok(grid.cell_volume() * acc)
}

/// Decay length of a profile estimated from the log-slope of its outer half.
pub fn profile_decay_length(p: &RadialProfile) -> f64 {
    let m = p.w.len();
    let (a, b) = (m / 4, m / 2);
    if p.w[b] <= 0.0 || p.w[a] <= 0.0 {
        return p.h;
    }
    let corr = (p.n as f64 - 1.0) / 2.0 * ln(b as f64 / a as f64);
    let slope = (ln(p.w[a]) - ln(p.w[b]) - corr) / ((b - a) as f64 * p.h);
    if slope > 0.0 {
        1.0 / slope
    } else {
        p.r_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub r_requested: f64,
    pub r: f64,
    pub value: f64,
}

/// Overlap at every separation in `r_grid` (increasing).
pub fn decay_sweep(p: &RadialProfile, q: &RadialProfile, r_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("separation grid must be increasing".into()));
    }
    let ev = OverlapEvaluator::new(p, q)?;
    if let Some(&r_max) = r_grid.last() {
        let ell = profile_decay_length(p).max(profile_decay_length(q));
        let room = p.r_max().min(q.r_max());
        if r_max + 2.0 * ell > room {
            return Err(Error::SupportExitsGrid((r_max + 2.0 * ell) / room));
        }
    }
    Ok(r_grid
        .iter()
        .map(|&r| {
            let o = ev.at(r);
            SweepPoint { r_requested: r, r: o.r, value: o.value }
        })
        .collect())
}

/// Shape of the fitted law for log I(R).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// const + p·log R - rate·R
    Leading,
    /// const + p·log R - rate·R + a/R
    AlgebraicCorrection,
}

impl FitModel {
    /// AlgebraicCorrection for equal decay rates in N = 1, where the overlap is
    /// (R - 1)·e^{-2R} up to a constant and the 1/R term biases a leading-order fit.
    pub fn for_case(n: usize, equal_rates: bool) -> Self {
        if n == 1 && equal_rates {
            FitModel::AlgebraicCorrection
        } else {
            FitModel::Leading
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub power: f64,
    /// Coefficient of 1/R when fitted.
    pub correction: Option<f64>,
    pub window: (f64, f64),
    pub fit_residual: f64,
    pub points: usize,
    pub model: FitModel,
}

/// Least-squares fit of log I(R) on the points with R in `window`.
pub fn decay_fit(sweep: &[SweepPoint], window: (f64, f64), model: FitModel) -> Result<DecayFit> {
    let (lo, hi) = window;
    if sweep.is_empty() || lo < sweep[0].r - 1e-9 || hi > sweep[sweep.len() - 1].r + 1e-9 {
        return Err(Error::WindowOutsideRange { lo, hi });
    }
    let pts: Vec<&SweepPoint> = sweep.iter().filter(|s| s.r >= lo - 1e-9 && s.r <= hi + 1e-9 && s.value > 0.0).collect();
    if pts.len() < 12 {
        return Err(Error::TooFewPoints { got: pts.len(), need: 12 });
    }
    let p = match model {
        FitModel::Leading => 3,
        FitModel::AlgebraicCorrection => 4,
    };
    let mut design = Vec::with_capacity(pts.len() * p);
    let mut y = Vec::with_capacity(pts.len());
    for s in &pts {
        design.extend_from_slice(&[1.0, ln(s.r), -s.r]);
        if p == 4 {
            design.push(1.0 / s.r);
        }
        y.push(ln(s.value));
    }
    let (c, res) = lstsq(&design, &y, p)?;
    if !(res <= 1e-2) {
        return Err(Error::FitResidual(res));
    }
    Ok(DecayFit {
        rate: c[2],
        power: c[1],
        correction: if p == 4 { Some(c[3]) } else { None },
        window,
        fit_residual: res,
        points: pts.len(),
        model,
    })
}

/// `count` separations evenly spaced on [lo, hi].
pub fn linear_r_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// `count` separations geometrically spaced on [lo, hi].
pub fn geometric_r_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let ratio = ln(hi / lo) / (count - 1) as f64;
    (0..count).map(|i| lo * crate::math::exp(ratio * i as f64)).collect()
}
