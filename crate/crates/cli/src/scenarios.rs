//! Ready-made scenarios covering the coupling classes and the regimes of the existence rules.

use crate::config::{Config, Scenario};

pub const BUNDLED_TOML: &str = r#"
[[scenario]]
name = "k3-attractive"
task = "predict"
system = { lambda = [1.0, 1.0, 1.0], beta = [[1, 2, 0.05], [1, 3, 0.05], [2, 3, 0.05]] }

[[scenario]]
name = "k3-repulsive"
task = "predict"
system = { lambda = [1.0, 1.0, 1.0], beta = [[1, 2, -0.2], [1, 3, -0.2], [2, 3, -0.2]] }

[[scenario]]
name = "k3-repulsive-mixed"
task = "predict"
system = { lambda = [1.0, 1.0, 1.0], beta = [[1, 2, 0.2], [1, 3, -0.2], [2, 3, -0.2]] }

[[scenario]]
name = "k3-total-mixed-exists"
task = "full-report"
system = { lambda = [1.0, 2.0, 2.5], beta = [[1, 2, 0.05], [1, 3, 0.05], [2, 3, -0.05]] }
grid = { extent = 20.0, spacing = 0.01 }

[[scenario]]
name = "k3-total-mixed-nonexists"
task = "full-report"
system = { lambda = [2.0, 1.0, 1.0] }
grid = { extent = 12.0, spacing = 0.02 }
delta = { delta = 0.01, t = [[1, 2, 1.0], [1, 3, 2.0], [2, 3, 0.5]], beta_hat = [[1, 2, 1.0], [1, 3, 1.0], [2, 3, -1.0]] }
options = { centers = [[0.0, 0.0, 0.0]], r_grid = { lo = 0.0, hi = 14.5, count = 30 } }

[[scenario]]
name = "k4-caseH-exists"
task = "predict"
system = { lambda = [1.0, 1.0, 1.0, 1.0], beta = [[1, 2, 3.0], [1, 3, 0.05], [1, 4, -0.01], [2, 3, -0.01], [2, 4, 0.05], [3, 4, -0.01]] }

[[scenario]]
name = "k4-caseH-nonexists"
task = "predict"
system = { lambda = [2.0, 2.0, 1.0, 1.0] }
delta = { delta = 0.01, t = [[1, 2, 1.0], [1, 3, 2.0], [1, 4, 0.5], [2, 3, 0.5], [2, 4, 2.0], [3, 4, 0.5]], beta_hat = [[1, 2, 1.0], [1, 3, 1.0], [1, 4, -1.0], [2, 3, -1.0], [2, 4, 1.0], [3, 4, -1.0]] }

[[scenario]]
name = "decay-equal-lambda"
task = "decay"
system = { lambda = [1.0, 1.0], beta = [[1, 2, 0.1]] }

[[scenario]]
name = "decay-unequal-lambda"
task = "decay"
system = { lambda = [1.0, 4.0], beta = [[1, 2, 0.1]] }
"#;

pub fn bundled_config() -> Config {
    Config::from_toml(BUNDLED_TOML).expect("bundled scenarios parse")
}

pub fn bundled_scenarios() -> Vec<Scenario> {
    bundled_config().scenarios
}

pub fn find(name: &str) -> Option<Scenario> {
    bundled_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cnls_core::blocks::SignGraph;

    #[test]
    fn nine_scenarios_with_unique_names() {
        let s = bundled_scenarios();
        assert_eq!(s.len(), 9);
        for n in [
            "k3-attractive",
            "k3-repulsive",
            "k3-repulsive-mixed",
            "k3-total-mixed-exists",
            "k3-total-mixed-nonexists",
            "k4-caseH-exists",
            "k4-caseH-nonexists",
            "decay-equal-lambda",
            "decay-unequal-lambda",
        ] {
            assert!(find(n).is_some(), "{n}");
        }
    }

    #[test]
    fn case_h_sign_pattern() {
        let want = [(0, 1, true), (0, 2, true), (0, 3, false), (1, 2, false), (1, 3, true), (2, 3, false)];
        for name in ["k4-caseH-exists", "k4-caseH-nonexists"] {
            let g = SignGraph::from_spec(&find(name).unwrap().spec().unwrap());
            for &(i, j, p) in &want {
                assert_eq!(g.positive(i, j), p, "{name} ({i},{j})");
            }
        }
    }

    #[test]
    fn delta_couplings_match_the_scaling() {
        let s = find("k3-total-mixed-nonexists").unwrap().spec().unwrap();
        assert!((s.beta(0, 1) - 0.01).abs() < 1e-15);
        assert!((s.beta(0, 2) - 1e-4).abs() < 1e-15);
        assert!((s.beta(1, 2) + 0.1).abs() < 1e-15);
    }
}
