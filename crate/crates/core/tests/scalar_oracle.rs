//! Three-dimensional soliton against an independent fixed-point solve.

use cnls_core::scalar::solve_scalar_radial;

/// Tridiagonal solve, a on the sub-, b on the main and c on the super-diagonal.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = if i + 1 < n { c[i] / m } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Petviashvili iteration for -v'' + v = v³/r² with v = r·w, v(0) = v(R) = 0.
/// Returns (w(0), ∫₀^R v² dr).
fn petviashvili(extent: f64, h: f64) -> (f64, f64) {
    let n = (extent / h).round() as usize - 1;
    let r: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let (sub, sup) = (vec![-1.0 / (h * h); n], vec![-1.0 / (h * h); n]);
    let main = vec![2.0 / (h * h) + 1.0; n];
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let rr = if i + 1 < n { v[i + 1] } else { 0.0 };
                (2.0 * v[i] - l - rr) / (h * h) + v[i]
            })
            .collect()
    };
    let mut v: Vec<f64> = r.iter().map(|&x| 3.0 * x * (-x * x / 2.0).exp()).collect();
    for _ in 0..500 {
        let nl: Vec<f64> = v.iter().zip(&r).map(|(v, r)| v * v * v / (r * r)).collect();
        let mv = apply(&v);
        let s: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>() / v.iter().zip(&nl).map(|(a, b)| a * b).sum::<f64>();
        let next = thomas(&sub, &main, &sup, &nl);
        let f = s.powf(1.5);
        let new: Vec<f64> = next.iter().map(|x| f * x).collect();
        let change = new.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = new;
        if change < 1e-13 {
            break;
        }
    }
    // w(0) = v'(0), one-sided second-order
    let w0 = (4.0 * v[0] - v[1]) / (2.0 * h);
    (w0, h * v.iter().map(|x| x * x).sum::<f64>())
}

#[test]
fn three_dimensional_soliton_matches_fixed_point_solve() {
    let (w0, l2) = petviashvili(20.0, 0.005);
    // the ground state of -Δw + w = w³ in ℝ³ peaks at about 4.3374
    assert!((w0 - 4.3374).abs() < 2e-3, "oracle w0 {w0}");
    let s = solve_scalar_radial(1.0, 1.0, 3, 20.0, 0.005).unwrap();
    assert!((s.w0() - w0).abs() < 1e-3 * w0, "{} vs {w0}", s.w0());
    let norm2 = 4.0 * std::f64::consts::PI * l2;
    assert!((s.norm2 - norm2).abs() < 1e-3 * norm2, "{} vs {norm2}", s.norm2);
}

#[test]
fn scaled_three_dimensional_soliton() {
    // w_{λ,μ}(x) = √(λ/μ) w(√λ x)
    let base = solve_scalar_radial(1.0, 1.0, 3, 20.0, 0.005).unwrap();
    let s = solve_scalar_radial(2.0, 0.5, 3, 20.0 / 2f64.sqrt(), 0.005 / 2f64.sqrt()).unwrap();
    assert!((s.w0() - 2.0 * base.w0()).abs() < 1e-6 * s.w0());
    // ‖w_{λ,μ}‖₂² = λ^{1-N/2}/μ · ‖w‖₂²
    assert!((s.norm2 - 2f64.powf(-0.5) / 0.5 * base.norm2).abs() < 1e-6 * s.norm2);
}
