use cnls_core::blocks::{classify_couplings, optimal_decompositions, SignGraph};
use cnls_core::model::{build_system, ConstraintPartition, FieldVector, Grid, Norms, SystemParams, SystemSpec};
use cnls_core::solver::{hessian_apply, project_nehari, rho_hat};
use proptest::prelude::*;

fn spec(lambda: Vec<f64>, upper: &[f64]) -> SystemSpec {
    let k = lambda.len();
    let mut b = vec![vec![0.0; k]; k];
    let mut p = 0;
    for i in 0..k {
        for j in i + 1..k {
            b[i][j] = upper[p];
            b[j][i] = upper[p];
            p += 1;
        }
    }
    build_system(&SystemParams { n: 1, k, lambda, mu: vec![1.0; k], beta: b }).unwrap()
}

fn bumps(g: &Grid, centers: &[f64], widths: &[f64]) -> FieldVector {
    let xs = g.axis_coords(0);
    let comps = centers
        .iter()
        .zip(widths)
        .map(|(&c, &w)| xs.iter().map(|&x| 1.0 / (w * (x - c)).cosh()).collect())
        .collect();
    FieldVector::new(g.clone(), comps).unwrap()
}

fn max_abs_diff(a: &FieldVector, b: &FieldVector) -> f64 {
    a.comps.iter().flatten().zip(b.comps.iter().flatten()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![-0.8f64..-0.01, 0.01f64..0.8]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, .. ProptestConfig::default() })]

    #[test]
    fn projection_is_idempotent_and_satisfies_the_energy_identity(
        l in prop::collection::vec(0.5f64..3.0, 3),
        b in prop::collection::vec(coupling(), 3),
        c in prop::collection::vec(-2.0f64..2.0, 3),
        w in prop::collection::vec(0.6f64..1.8, 3),
        grouped in any::<bool>(),
    ) {
        let s = spec(l, &b);
        let g = Grid::line(10.0, 0.05).unwrap();
        let u = bumps(&g, &c, &w);
        let part = if grouped {
            ConstraintPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap()
        } else {
            ConstraintPartition::singletons(3)
        };
        let Ok(p1) = project_nehari(&s, &u, &part) else { return Ok(()) };
        let p2 = project_nehari(&s, &p1.field, &part).unwrap();
        let top = p1.field.comps.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(max_abs_diff(&p1.field, &p2.field) <= 1e-10 * top);
        for t in &p2.multipliers.t {
            prop_assert!((t - 1.0).abs() <= 1e-10);
        }
        // on the manifold E = ¼ Σ ‖u_j‖²_λ
        let n = Norms::compute(&s, &p1.field).unwrap();
        let quarter: f64 = 0.25 * n.lam.iter().sum::<f64>();
        prop_assert!((n.energy(&s) - quarter).abs() <= 1e-10 * quarter);
    }

    #[test]
    fn hessian_is_symmetric(
        l in prop::collection::vec(0.5f64..3.0, 3),
        b in prop::collection::vec(coupling(), 3),
        c in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let s = spec(l, &b);
        let g = Grid::line(6.0, 0.1).unwrap();
        let u = bumps(&g, &c[..3], &[1.0, 1.2, 0.8]);
        let v = bumps(&g, &c[3..6], &[0.7, 1.5, 1.1]);
        let d = bumps(&g, &c[6..], &[1.3, 0.9, 1.0]);
        let hv = hessian_apply(&s, &u, &v).unwrap();
        let hd = hessian_apply(&s, &u, &d).unwrap();
        let (x, y) = (d.dot(&hv), v.dot(&hd));
        prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()));
    }

    #[test]
    fn rho_hat_grows_with_lambda_and_scales_inversely_with_the_weight(
        a in 0.3f64..2.0, b in 0.3f64..2.0, shift in -2.0f64..2.0,
        l1 in 0.2f64..3.0, dl in 0.05f64..2.0, scale in 0.2f64..5.0,
    ) {
        let g = Grid::line(12.0, 0.05).unwrap();
        let xs = g.axis_coords(0);
        let pi: Vec<f64> = xs.iter().map(|&x| 1.0 / (a * x).cosh()).collect();
        let pj: Vec<f64> = xs.iter().map(|&x| 1.0 / (b * (x - shift)).cosh()).collect();
        let r1 = rho_hat(&g, &pi, &pj, l1).unwrap();
        let r2 = rho_hat(&g, &pi, &pj, l1 + dl).unwrap();
        prop_assert!(r2 > r1);
        let f = scale.sqrt();
        let qi: Vec<f64> = pi.iter().map(|x| f * x).collect();
        let qj: Vec<f64> = pj.iter().map(|x| f * x).collect();
        let r3 = rho_hat(&g, &qi, &qj, l1).unwrap();
        prop_assert!((r3 * scale - r1).abs() <= 1e-8 * r1);
    }

    #[test]
    fn degree_and_class_ignore_component_order(
        k in 2usize..7,
        signs in prop::collection::vec(any::<bool>(), 15),
        seed in any::<u64>(),
    ) {
        let mut idx = 0;
        let mut pos = vec![vec![false; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                pos[i][j] = signs[idx];
                pos[j][i] = signs[idx];
                idx += 1;
            }
        }
        let g = SignGraph::from_fn(k, |i, j| pos[i][j]);
        let mut perm: Vec<usize> = (0..k).collect();
        let mut r = seed;
        for i in (1..k).rev() {
            r = r.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (r >> 33) as usize % (i + 1));
        }
        let gp = g.permuted(&perm);
        let (o, op) = (optimal_decompositions(&g), optimal_decompositions(&gp));
        prop_assert_eq!(o.degree, op.degree);
        prop_assert_eq!(o.decompositions.len(), op.decompositions.len());
        prop_assert!(1 <= o.degree && o.degree <= k);
        prop_assert_eq!(classify_couplings(&g), classify_couplings(&gp));
        for d in &o.decompositions {
            for s in 0..d.degree() {
                prop_assert!(g.is_clique(d.block(s)));
            }
        }
    }
}
