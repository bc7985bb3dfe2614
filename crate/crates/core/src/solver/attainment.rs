//! Whether the least energy looks attained, judged from a minimization run and the split
//! limits of separation sweeps.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math::abs;
use crate::model::{set_label, Norms, SystemSpec};
use crate::solver::minimize::{nontrivial, Diagnosis, GroundStateResult};
use crate::solver::separation::SeparationCurve;

pub const ATTAINMENT_NOTE: &str =
    "numerical diagnosis from a finite grid and finite iteration count; it is not a proof of existence or nonexistence";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttainmentVerdict {
    Attained,
    SplittingDetected,
    /// The run neither converged nor split.
    Inconclusive,
    /// Some component collapsed below the triviality floor.
    Degenerate,
}

impl AttainmentVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            AttainmentVerdict::Attained => "attained",
            AttainmentVerdict::SplittingDetected => "splitting-detected",
            AttainmentVerdict::Inconclusive => "inconclusive",
            AttainmentVerdict::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCertificate {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub limit: f64,
    /// limit - energy; positive when the result undercuts the split.
    pub margin: f64,
    /// Σ_{i∈left, j∈right} β_ij ∫u_i²u_j² at the result.
    pub cross_term: f64,
    /// Whether any coupling crosses this split (a split with none is ignored).
    pub interacting: bool,
}

impl SplitCertificate {
    pub fn label(&self) -> String {
        let mut s = set_label(&self.left);
        s.push('|');
        s.push_str(&set_label(&self.right));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttainmentReport {
    pub verdict: AttainmentVerdict,
    pub energy: f64,
    pub splits: Vec<SplitCertificate>,
    /// Index into `splits` of the split the run separated along, if any.
    pub diverging_split: Option<usize>,
    /// The two sides of the widest centroid gap at the result.
    pub observed_split: (Vec<usize>, Vec<usize>),
    pub separation: f64,
    pub tol_split: f64,
    pub note: &'static str,
}

fn cross_term(spec: &SystemSpec, norms: &Norms, left: &[usize], right: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in left {
        for &j in right {
            s += spec.beta(i, j) * norms.q(i, j);
        }
    }
    s
}

fn same_split(a: (&[usize], &[usize]), b: (&[usize], &[usize])) -> bool {
    let eq = |x: &[usize], y: &[usize]| {
        let mut x = x.to_vec();
        let mut y = y.to_vec();
        x.sort_unstable();
        y.sort_unstable();
        x == y
    };
    (eq(a.0, b.0) && eq(a.1, b.1)) || (eq(a.0, b.1) && eq(a.1, b.0))
}

/// Split at the widest gap between consecutive centroids of nontrivial components; trivial
/// components join the side of the nearest centroid.
fn observed_split(result: &GroundStateResult) -> (Vec<usize>, Vec<usize>) {
    let live = nontrivial(&result.masses);
    let k = result.centroids.len();
    let mut order: Vec<usize> = (0..k).filter(|&j| live[j]).collect();
    order.sort_by(|&a, &b| result.centroids[a].partial_cmp(&result.centroids[b]).unwrap_or(core::cmp::Ordering::Equal));
    if order.len() < 2 {
        return ((0..k).collect(), Vec::new());
    }
    let (mut cut, mut gap) = (1, f64::NEG_INFINITY);
    for p in 1..order.len() {
        let g = result.centroids[order[p]] - result.centroids[order[p - 1]];
        if g > gap {
            gap = g;
            cut = p;
        }
    }
    let mid = 0.5 * (result.centroids[order[cut - 1]] + result.centroids[order[cut]]);
    let mut left: Vec<usize> = order[..cut].to_vec();
    let mut right: Vec<usize> = order[cut..].to_vec();
    for j in 0..k {
        if !live[j] {
            if result.centroids[j] < mid {
                left.push(j);
            } else {
                right.push(j);
            }
        }
    }
    left.sort_unstable();
    right.sort_unstable();
    (left, right)
}

pub fn check_attainment(spec: &SystemSpec, result: &GroundStateResult, sweeps: &[SeparationCurve], tol_split: f64) -> AttainmentReport {
    let norms = Norms::compute(spec, &result.fields).ok();
    let splits: Vec<SplitCertificate> = sweeps
        .iter()
        .map(|c| {
            let interacting = c.left.iter().any(|&i| c.right.iter().any(|&j| spec.beta(i, j) != 0.0));
            SplitCertificate {
                left: c.left.clone(),
                right: c.right.clone(),
                limit: c.limit,
                margin: c.limit - result.energy,
                cross_term: norms.as_ref().map_or(f64::NAN, |n| cross_term(spec, n, &c.left, &c.right)),
                interacting,
            }
        })
        .collect();
    let observed = observed_split(result);
    let separation = result.separation();
    let near_limit = splits.iter().position(|s| s.interacting && s.margin < tol_split);
    let diverging_split = splits
        .iter()
        .position(|s| same_split((&s.left, &s.right), (&observed.0, &observed.1)))
        .filter(|_| result.diagnosis == Diagnosis::SplittingDetected)
        .or(near_limit.filter(|&i| splits[i].margin > -tol_split));

    let verdict = match result.diagnosis {
        Diagnosis::Degenerate => AttainmentVerdict::Degenerate,
        Diagnosis::SplittingDetected => AttainmentVerdict::SplittingDetected,
        Diagnosis::Attained => {
            if nontrivial(&result.masses).iter().any(|l| !l) {
                AttainmentVerdict::Degenerate
            } else if near_limit.is_some() {
                AttainmentVerdict::SplittingDetected
            } else {
                AttainmentVerdict::Attained
            }
        }
        Diagnosis::MaxIterations => {
            if near_limit.is_some_and(|i| abs(splits[i].margin) <= tol_split) {
                AttainmentVerdict::SplittingDetected
            } else {
                AttainmentVerdict::Inconclusive
            }
        }
    };
    AttainmentReport {
        verdict,
        energy: result.energy,
        splits,
        diverging_split,
        observed_split: observed,
        separation,
        tol_split,
        note: ATTAINMENT_NOTE,
    }
}
