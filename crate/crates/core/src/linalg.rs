//! Small dense and banded linear algebra used by the solvers.
//!
//! Matrices are row-major `Vec<f64>`. Sizes are tiny (k×k multiplier systems, Ritz
//! projections) or banded (discretized operators), so nothing here tries to be clever.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, sqrt};

/// Factorization of a symmetric tridiagonal matrix (Thomas algorithm, no pivoting).
#[derive(Debug, Clone)]
pub struct TriFactor {
    off: Vec<f64>,
    piv: Vec<f64>,
}

impl TriFactor {
    /// `diag` has n entries, `off` has n-1 (sub = super diagonal).
    pub fn new(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        if off.len() + 1 != n && !(n == 0 && off.is_empty()) {
            return Err(Error::DimensionMismatch("tridiagonal off-diagonal length".into()));
        }
        let mut piv = vec![0.0; n];
        for i in 0..n {
            let mut d = diag[i];
            if i > 0 {
                d -= off[i - 1] * off[i - 1] / piv[i - 1];
            }
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular);
            }
            piv[i] = d;
        }
        Ok(Self { off: off.to_vec(), piv })
    }

    pub fn len(&self) -> usize {
        self.piv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.piv.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.piv.len();
        for i in 1..n {
            b[i] -= self.off[i - 1] / self.piv[i - 1] * b[i - 1];
        }
        if n > 0 {
            b[n - 1] /= self.piv[n - 1];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            b[i] = (b[i] - self.off[i] * b[i + 1]) / self.piv[i];
        }
    }
}

/// Symmetric banded matrix, lower storage: `band[i*(bw+1) + d] = A[i][i-d]`.
#[derive(Debug, Clone)]
pub struct BandedSym {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    /// Entry `A[i][j]` for `|i-j| <= bw`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bw {
            0.0
        } else {
            self.band[i * (self.bw + 1) + d]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        assert!(d <= self.bw, "entry outside band");
        self.band[i * (self.bw + 1) + d] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let w = self.bw + 1;
        for v in y.iter_mut() {
            *v = 0.0;
        }
        for i in 0..self.n {
            let row = &self.band[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for d in 1..=self.bw.min(i) {
                let a = row[d];
                if a != 0.0 {
                    y[i] += a * x[i - d];
                    y[i - d] += a * x[i];
                }
            }
        }
    }

    /// Gershgorin interval enclosing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.n];
        let w = self.bw + 1;
        for i in 0..self.n {
            for d in 1..=self.bw.min(i) {
                let a = abs(self.band[i * w + d]);
                radius[i] += a;
                radius[i - d] += a;
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let c = self.band[i * w];
            lo = lo.min(c - radius[i]);
            hi = hi.max(c + radius[i]);
        }
        (lo, hi)
    }

    /// Copy with `s` added to the diagonal.
    pub fn shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        let w = self.bw + 1;
        for i in 0..self.n {
            out.band[i * w] += s;
        }
        out
    }

    /// Number of (negative, zero, positive) pivots of an unpivoted LDLᵀ factorization.
    /// By Sylvester's law this is the inertia whenever the factorization exists.
    pub fn inertia(&self) -> (usize, usize, usize) {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        // l[i][d] = L[i][i-d] (d >= 1); dd = pivots
        let mut l = vec![0.0; n * w];
        let mut dd = vec![0.0; n];
        let (mut neg, mut zero, mut pos) = (0, 0, 0);
        let tiny = 1e-300;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut s = self.band[i * w + (i - j)];
                let lo2 = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for m in lo2..j {
                    s -= l[i * w + (i - m)] * l[j * w + (j - m)] * dd[m];
                }
                l[i * w + (i - j)] = s / dd[j];
            }
            let mut s = self.band[i * w];
            for m in lo..i {
                let lim = l[i * w + (i - m)];
                s -= lim * lim * dd[m];
            }
            if abs(s) < tiny {
                zero += 1;
                s = if s < 0.0 { -tiny } else { tiny };
            } else if s < 0.0 {
                neg += 1;
            } else {
                pos += 1;
            }
            dd[i] = s;
        }
        (neg, zero, pos)
    }
}

/// Cholesky factor of a symmetric positive definite banded matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn new(a: &BandedSym) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = a.band[i * w + (i - j)];
                let lo2 = lo.max(j.saturating_sub(bw));
                for m in lo2..j {
                    s -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l[i * w] = sqrt(s);
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for m in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - m)] * b[m];
            }
            b[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for m in (i + 1)..(i + 1 + self.bw).min(self.n) {
                s -= self.l[m * w + (m - i)] * b[m];
            }
            b[i] = s / self.l[i * w];
        }
    }
}

/// Solve `A x = b` by LU with partial pivoting. Returns x and the 1-norm condition number.
pub fn lu_solve(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::DimensionMismatch("lu_solve".into()));
    }
    let inv = inverse(a, n)?;
    let mut x = vec![0.0; n];
    for i in 0..n {
        x[i] = (0..n).map(|j| inv[i * n + j] * b[j]).sum();
    }
    let cond = norm1(a, n) * norm1(&inv, n);
    // one step of iterative refinement
    let mut r = b.to_vec();
    for i in 0..n {
        for j in 0..n {
            r[i] -= a[i * n + j] * x[j];
        }
    }
    for i in 0..n {
        x[i] += (0..n).map(|j| inv[i * n + j] * r[j]).sum::<f64>();
    }
    Ok((x, cond))
}

fn norm1(a: &[f64], n: usize) -> f64 {
    (0..n).map(|j| (0..n).map(|i| abs(a[i * n + j])).sum::<f64>()).fold(0.0, f64::max)
}

/// Dense inverse by Gauss-Jordan with partial pivoting.
pub fn inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(abs(*v)));
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if abs(m[r * n + c]) > abs(m[p * n + c]) {
                p = r;
            }
        }
        if abs(m[p * n + c]) <= 1e-300 || abs(m[p * n + c]) <= scale * 1e-15 {
            return Err(Error::Singular);
        }
        if p != c {
            for j in 0..n {
                m.swap(c * n + j, p * n + j);
                inv.swap(c * n + j, p * n + j);
            }
        }
        let d = m[c * n + c];
        for j in 0..n {
            m[c * n + j] /= d;
            inv[c * n + j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r * n + c];
                if f != 0.0 {
                    for j in 0..n {
                        m[r * n + j] -= f * m[c * n + j];
                        inv[r * n + j] -= f * inv[c * n + j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
/// Returns ascending eigenvalues and eigenvectors stored as rows (`vecs[i*n..]`).
pub fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = m[i * n + j] * m[i * n + j];
                total += x;
                if i != j {
                    off += x;
                }
            }
        }
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (abs(theta) + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap_or(core::cmp::Ordering::Equal));
    let vals = idx.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (r, &i) in idx.iter().enumerate() {
        for k in 0..n {
            vecs[r * n + k] = v[k * n + i];
        }
    }
    (vals, vecs)
}

/// Least squares `min ‖X c - y‖` by Householder QR. `x` is row-major with `p` columns.
/// Returns coefficients and the root-mean-square residual.
pub fn lstsq(x: &[f64], y: &[f64], p: usize) -> Result<(Vec<f64>, f64)> {
    let m = y.len();
    if x.len() != m * p || m < p {
        return Err(Error::DimensionMismatch("lstsq".into()));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    for c in 0..p {
        let norm = sqrt((c..m).map(|r| a[r * p + c] * a[r * p + c]).sum());
        if norm == 0.0 {
            return Err(Error::Singular);
        }
        let alpha = if a[c * p + c] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (c..m).map(|r| a[r * p + c]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|t| t * t).sum();
        if vn == 0.0 {
            continue;
        }
        for j in c..p {
            let s: f64 = (c..m).map(|r| v[r - c] * a[r * p + j]).sum::<f64>() * 2.0 / vn;
            for r in c..m {
                a[r * p + j] -= s * v[r - c];
            }
        }
        let s: f64 = (c..m).map(|r| v[r - c] * b[r]).sum::<f64>() * 2.0 / vn;
        for r in c..m {
            b[r] -= s * v[r - c];
        }
    }
    let mut coef = vec![0.0; p];
    for c in (0..p).rev() {
        let mut s = b[c];
        for j in c + 1..p {
            s -= a[c * p + j] * coef[j];
        }
        if abs(a[c * p + c]) < 1e-300 {
            return Err(Error::Singular);
        }
        coef[c] = s / a[c * p + c];
    }
    let mut ss = 0.0;
    for r in 0..m {
        let pred: f64 = (0..p).map(|j| x[r * p + j] * coef[j]).sum();
        ss += (y[r] - pred) * (y[r] - pred);
    }
    Ok((coef, sqrt(ss / m as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let off = [1.0, -2.0, 0.5];
        let f = TriFactor::new(&diag, &off).unwrap();
        let mut b = [1.0, 2.0, 3.0, 4.0];
        f.solve_in_place(&mut b);
        let a = [4.0, 1.0, 0.0, 0.0, 1.0, 5.0, -2.0, 0.0, 0.0, -2.0, 6.0, 0.5, 0.0, 0.0, 0.5, 7.0];
        let (x, _) = lu_solve(&a, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        for i in 0..4 {
            assert!((x[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn band_cholesky_and_inertia() {
        let n = 30;
        let mut a = BandedSym::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 3.0 + (i as f64) * 0.1);
            if i >= 1 {
                a.add(i, i - 1, -1.0);
            }
            if i >= 2 {
                a.add(i, i - 2, 0.3);
            }
        }
        let ch = BandCholesky::new(&a).unwrap();
        let x0: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x0, &mut b);
        ch.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x0[i]).abs() < 1e-12);
        }
        assert_eq!(a.inertia(), (0, 0, n));
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) <= 2 {
                    dense[i * n + j] = a.get(i, j);
                }
            }
        }
        let (vals, _) = sym_eigen(&dense, n);
        let s = vals[4] + 1e-3;
        let neg = vals.iter().filter(|&&v| v < s).count();
        assert_eq!(a.shifted(-s).inertia().0, neg);
        assert!(BandCholesky::new(&a.shifted(-s)).is_err());
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let (vals, vecs) = sym_eigen(&a, 3);
        let expect = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for i in 0..3 {
            assert!((vals[i] - expect[i]).abs() < 1e-13);
            let v = &vecs[i * 3..i * 3 + 3];
            for r in 0..3 {
                let av: f64 = (0..3).map(|c| a[r * 3 + c] * v[c]).sum();
                assert!((av - vals[i] * v[r]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut design = Vec::new();
        let mut y = Vec::new();
        for &x in &xs {
            design.extend_from_slice(&[1.0, x]);
            y.push(3.0 - 2.0 * x);
        }
        let (c, res) = lstsq(&design, &y, 2).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12 && res < 1e-12);
    }
}
