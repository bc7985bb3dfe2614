//! Sign structure of the coupling matrix: optimal block decompositions (minimum clique
//! covers of the positive-coupling graph), the four coupling classes, interaction forces
//! between blocks, eventual decompositions and the existence predictor built on them.
//!
//! Indices are 0-based throughout; labels rendered for humans are 1-based.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, powf, sqrt};
use crate::model::{set_label, SystemSpec};
use crate::overlap::{geometric_r_grid, OverlapEvaluator};
use crate::scalar::RadialProfile;

/// Largest k for which the clique cover is searched exactly.
pub const EXACT_LIMIT: usize = 12;

/// Which off-diagonal couplings are positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignGraph {
    k: usize,
    pos: Vec<bool>,
}

impl SignGraph {
    pub fn from_spec(spec: &SystemSpec) -> Self {
        Self::from_fn(spec.k, |i, j| spec.beta(i, j) > 0.0)
    }

    pub fn from_fn(k: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut pos = vec![false; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let p = f(i, j);
                pos[i * k + j] = p;
                pos[j * k + i] = p;
            }
        }
        Self { k, pos }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn positive(&self, i: usize, j: usize) -> bool {
        self.pos[i * self.k + j]
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.k).flat_map(move |i| (i + 1..self.k).map(move |j| (i, j)))
    }

    pub fn all_positive(&self) -> bool {
        self.pairs().all(|(i, j)| self.positive(i, j))
    }

    pub fn all_negative(&self) -> bool {
        self.pairs().all(|(i, j)| !self.positive(i, j))
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(a, &i)| set[a + 1..].iter().all(|&j| self.positive(i, j)))
    }

    /// Graph on `perm[a]` relabelled as `a`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.k, |a, b| self.positive(perm[a], perm[b]))
    }
}

/// A partition of the components into consecutive runs of a permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockDecomposition {
    pub permutation: Vec<usize>,
    /// 0 = a₀ < a₁ < … < a_d = k.
    pub cuts: Vec<usize>,
}

impl BlockDecomposition {
    /// Canonical form: members sorted inside each block, blocks sorted by least member.
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort_by_key(|b| b[0]);
        let mut permutation = Vec::new();
        let mut cuts = vec![0];
        for b in &blocks {
            permutation.extend_from_slice(b);
            cuts.push(permutation.len());
        }
        Self { permutation, cuts }
    }

    pub fn degree(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn block(&self, s: usize) -> &[usize] {
        &self.permutation[self.cuts[s]..self.cuts[s + 1]]
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        (0..self.degree()).map(|s| self.block(s).to_vec()).collect()
    }

    pub fn block_of(&self, i: usize) -> usize {
        let pos = self.permutation.iter().position(|&p| p == i).expect("index outside decomposition");
        self.cuts.iter().rposition(|&c| c <= pos).unwrap()
    }

    /// e.g. `{1,2}|{3}|{4}`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = (0..self.degree()).map(|s| set_label(self.block(s))).collect();
        parts.join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalDecompositions {
    pub degree: usize,
    pub decompositions: Vec<BlockDecomposition>,
    /// False when k exceeded [`EXACT_LIMIT`] and a greedy cover was used.
    pub exact: bool,
}

fn cover_search(
    g: &SignGraph,
    v: usize,
    blocks: &mut Vec<Vec<usize>>,
    limit: usize,
    out: &mut Vec<Vec<Vec<usize>>>,
    first_only: bool,
) -> bool {
    if v == g.k {
        out.push(blocks.clone());
        return first_only;
    }
    for b in 0..blocks.len() {
        if blocks[b].iter().all(|&i| g.positive(i, v)) {
            blocks[b].push(v);
            let done = cover_search(g, v + 1, blocks, limit, out, first_only);
            blocks[b].pop();
            if done {
                return true;
            }
        }
    }
    if blocks.len() < limit {
        blocks.push(vec![v]);
        let done = cover_search(g, v + 1, blocks, limit, out, first_only);
        blocks.pop();
        if done {
            return true;
        }
    }
    false
}

/// All partitions into the fewest blocks with all inner couplings positive.
pub fn optimal_decompositions(g: &SignGraph) -> OptimalDecompositions {
    let k = g.k;
    if k == 0 {
        return OptimalDecompositions { degree: 0, decompositions: Vec::new(), exact: true };
    }
    if k > EXACT_LIMIT {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for v in 0..k {
            match blocks.iter_mut().find(|b| b.iter().all(|&i| g.positive(i, v))) {
                Some(b) => b.push(v),
                None => blocks.push(vec![v]),
            }
        }
        let d = blocks.len();
        return OptimalDecompositions {
            degree: d,
            decompositions: vec![BlockDecomposition::from_blocks(blocks)],
            exact: false,
        };
    }
    let mut d = 1;
    loop {
        let mut found = Vec::new();
        if cover_search(g, 0, &mut Vec::new(), d, &mut found, true) {
            break;
        }
        d += 1;
    }
    let mut all = Vec::new();
    cover_search(g, 0, &mut Vec::new(), d, &mut all, false);
    // assignment in index order already yields blocks sorted by least member
    let mut decompositions: Vec<BlockDecomposition> = all.into_iter().map(BlockDecomposition::from_blocks).collect();
    decompositions.sort();
    decompositions.dedup();
    OptimalDecompositions { degree: d, decompositions, exact: true }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingClass {
    PurelyAttractive,
    PurelyRepulsive,
    RepulsiveMixed,
    TotalMixed,
}

impl CouplingClass {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingClass::PurelyAttractive => "purely-attractive",
            CouplingClass::PurelyRepulsive => "purely-repulsive",
            CouplingClass::RepulsiveMixed => "repulsive-mixed",
            CouplingClass::TotalMixed => "total-mixed",
        }
    }
}

/// A block of `dec` whose couplings to every outside component are negative.
pub fn isolated_repulsive_block(g: &SignGraph, dec: &BlockDecomposition) -> Option<usize> {
    (0..dec.degree()).find(|&s| {
        let inside = dec.block(s);
        inside.iter().all(|&i| (0..g.k).filter(|j| !inside.contains(j)).all(|j| !g.positive(i, j)))
    })
}

pub fn classify_with(g: &SignGraph, opt: &OptimalDecompositions) -> CouplingClass {
    if g.all_positive() {
        CouplingClass::PurelyAttractive
    } else if g.all_negative() {
        CouplingClass::PurelyRepulsive
    } else if opt.decompositions.iter().any(|d| isolated_repulsive_block(g, d).is_some()) {
        CouplingClass::RepulsiveMixed
    } else {
        CouplingClass::TotalMixed
    }
}

pub fn classify_couplings(g: &SignGraph) -> CouplingClass {
    classify_with(g, &optimal_decompositions(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceSign {
    Attractive,
    Repulsive,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceTerm {
    pub i: usize,
    pub j: usize,
    pub beta: f64,
    /// Overlap at the maximizing separation.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceEstimate {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Max over the sampled separations of Σ β_ij ∫ φ_i²(x) φ_j²(x - R e₁) dx.
    pub value: f64,
    pub argmax_r: f64,
    pub terms: Vec<ForceTerm>,
    pub sign: ForceSign,
    /// (R, summed force) at every sampled separation.
    pub samples: Vec<(f64, f64)>,
}

/// Relative size below which a signed sum of overlaps is treated as cancellation noise.
pub const FORCE_NOISE: f64 = 1e-12;

/// Separations for the force supremum: 64 geometric points spanning [4, 20] decay lengths
/// of the slowest component, snapped to multiples of `h`.
pub fn force_r_grid(lambda_min: f64, h: f64) -> Vec<f64> {
    let ell = 1.0 / sqrt(lambda_min);
    let mut out: Vec<f64> = geometric_r_grid(4.0 * ell, 20.0 * ell, 64)
        .into_iter()
        .map(|r| crate::math::ceil(r / h - 1e-9) * h)
        .collect();
    out.dedup_by(|a, b| abs(*a - *b) < 0.5 * h);
    out
}

/// Summed cross interaction between two disjoint component sets, with `profiles[j]`
/// standing in for component j.
pub fn interaction_force(
    spec: &SystemSpec,
    left: &[usize],
    right: &[usize],
    profiles: &[RadialProfile],
    r_grid: &[f64],
) -> Result<ForceEstimate> {
    if profiles.len() != spec.k {
        return Err(Error::DimensionMismatch(format!("{} profiles for {} components", profiles.len(), spec.k)));
    }
    if left.is_empty() || right.is_empty() || left.iter().any(|i| right.contains(i)) {
        return Err(Error::InvalidPartition("force needs two disjoint nonempty blocks".into()));
    }
    if r_grid.is_empty() {
        return Err(Error::InvalidGrid("empty separation grid".into()));
    }
    let h = profiles[0].h;
    let r_floor = 4.0 / sqrt(spec.lambda_min());
    if r_grid.iter().any(|&r| r < r_floor - h) {
        return Err(Error::InvalidGrid(format!("separations must be at least {r_floor} (4 decay lengths)")));
    }
    let mut pairs = Vec::new();
    for &i in left {
        for &j in right {
            pairs.push((i, j, spec.beta(i, j), OverlapEvaluator::new(&profiles[i], &profiles[j])?));
        }
    }
    let mut samples = Vec::with_capacity(r_grid.len());
    let mut best: Option<(usize, f64)> = None;
    let mut overlaps = Vec::with_capacity(r_grid.len());
    for (n, &r) in r_grid.iter().enumerate() {
        let ov: Vec<f64> = pairs.iter().map(|(_, _, _, ev)| ev.at(r).value).collect();
        let r_used = pairs[0].3.at(r).r;
        let signed: f64 = pairs.iter().zip(&ov).map(|(p, o)| p.2 * o).sum();
        let scale: f64 = pairs.iter().zip(&ov).map(|(p, o)| abs(p.2) * o).sum();
        samples.push((r_used, signed));
        overlaps.push(ov);
        let resolved = scale > 0.0 && abs(signed) > FORCE_NOISE * scale;
        if resolved && best.is_none_or(|(_, v)| signed > v) {
            best = Some((n, signed));
        }
    }
    let (n, value, sign) = match best {
        Some((n, v)) => (n, v, if v > 0.0 { ForceSign::Attractive } else { ForceSign::Repulsive }),
        None => {
            let (n, v) = samples
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (n, s)| if s.1 > acc.1 { (n, s.1) } else { acc });
            (n, v, ForceSign::Indeterminate)
        }
    };
    let terms = pairs
        .iter()
        .zip(&overlaps[n])
        .map(|(p, &o)| ForceTerm { i: p.0, j: p.1, beta: p.2, overlap: o })
        .collect();
    Ok(ForceEstimate {
        left: left.to_vec(),
        right: right.to_vec(),
        value,
        argmax_r: samples[n].0,
        terms,
        sign,
        samples,
    })
}

/// Level-0 forces between every pair of blocks (s < t) of `dec`.
pub fn block_forces(
    spec: &SystemSpec,
    dec: &BlockDecomposition,
    profiles: &[RadialProfile],
    r_grid: &[f64],
) -> Result<Vec<ForceEstimate>> {
    let d = dec.degree();
    let mut out = Vec::new();
    for s in 0..d {
        for t in s + 1..d {
            out.push(interaction_force(spec, dec.block(s), dec.block(t), profiles, r_grid)?);
        }
    }
    Ok(out)
}

/// One chain of groupings A⁰ → A¹ → … → A^τ.
#[derive(Debug, Clone, PartialEq)]
pub struct EventualTree {
    /// levels[ς] lists the groups at level ς as sets of level-0 block indices.
    pub levels: Vec<Vec<Vec<usize>>>,
    /// forces[ς] holds (s, t, 𝔉^ς_{s,t}) for every pair of groups at level ς.
    pub forces: Vec<Vec<(usize, usize, f64)>>,
}

impl EventualTree {
    pub fn final_count(&self) -> usize {
        self.levels.last().map_or(0, |l| l.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventualDecomposition {
    pub start: BlockDecomposition,
    pub trees: Vec<EventualTree>,
    /// Smallest final block count over all trees.
    pub m: usize,
}

impl EventualDecomposition {
    pub fn m_max(&self) -> usize {
        self.trees.iter().map(|t| t.final_count()).max().unwrap_or(self.m)
    }

    /// Components of each final group of `tree`.
    pub fn final_components(&self, tree: usize) -> Vec<Vec<usize>> {
        let t = &self.trees[tree];
        t.levels
            .last()
            .map(|groups| {
                groups
                    .iter()
                    .map(|g| {
                        let mut c: Vec<usize> = g.iter().flat_map(|&b| self.start.block(b).iter().cloned()).collect();
                        c.sort_unstable();
                        c
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Partitions of `0..n` into cliques of `adj` that admit no further merge.
fn maximal_clique_partitions(n: usize, adj: &[bool]) -> Vec<Vec<Vec<usize>>> {
    fn rec(v: usize, n: usize, adj: &[bool], parts: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if v == n {
            let mergeable = (0..parts.len()).any(|a| {
                (a + 1..parts.len()).any(|b| parts[a].iter().all(|&x| parts[b].iter().all(|&y| adj[x * n + y])))
            });
            if !mergeable {
                out.push(parts.clone());
            }
            return;
        }
        for p in 0..parts.len() {
            if parts[p].iter().all(|&x| adj[x * n + v]) {
                parts[p].push(v);
                rec(v + 1, n, adj, parts, out);
                parts[p].pop();
            }
        }
        parts.push(vec![v]);
        rec(v + 1, n, adj, parts, out);
        parts.pop();
    }
    let mut out = Vec::new();
    rec(0, n, adj, &mut Vec::new(), &mut out);
    out
}

/// Iterated grouping of the blocks of `start`. `force0(s, t)` is the level-0 force between
/// blocks s and t of `start` (None when indeterminate); forces between composite groups are
/// sums of level-0 forces over the block pairs they contain.
pub fn eventual_decomposition(
    start: &BlockDecomposition,
    force0: impl Fn(usize, usize) -> Option<f64>,
) -> Result<EventualDecomposition> {
    let d = start.degree();
    let mut f0 = vec![None; d * d];
    for s in 0..d {
        for t in s + 1..d {
            let v = force0(s, t);
            f0[s * d + t] = v;
            f0[t * d + s] = v;
        }
    }
    let components = |g: &[usize]| -> Vec<usize> {
        let mut c: Vec<usize> = g.iter().flat_map(|&b| start.block(b).iter().cloned()).collect();
        c.sort_unstable();
        c
    };
    let composite = |a: &[usize], b: &[usize]| -> Result<f64> {
        let mut sum = 0.0;
        for &x in a {
            for &y in b {
                match f0[x * d + y] {
                    Some(v) => sum += v,
                    None => {
                        return Err(Error::IndeterminateForce { left: components(a), right: components(b) });
                    }
                }
            }
        }
        Ok(sum)
    };

    let mut trees = Vec::new();
    let mut stack: Vec<EventualTree> =
        vec![EventualTree { levels: vec![(0..d).map(|s| vec![s]).collect()], forces: Vec::new() }];
    while let Some(mut tree) = stack.pop() {
        let groups = tree.levels.last().unwrap().clone();
        let n = groups.len();
        let mut level_forces = Vec::new();
        let mut adj = vec![false; n * n];
        for s in 0..n {
            for t in s + 1..n {
                let v = composite(&groups[s], &groups[t])?;
                level_forces.push((s, t, v));
                adj[s * n + t] = v > 0.0;
                adj[t * n + s] = v > 0.0;
            }
        }
        tree.forces.push(level_forces);
        if !adj.iter().any(|&a| a) {
            trees.push(tree);
            continue;
        }
        for parts in maximal_clique_partitions(n, &adj) {
            let mut next: Vec<Vec<usize>> = parts
                .iter()
                .map(|p| {
                    let mut g: Vec<usize> = p.iter().flat_map(|&q| groups[q].iter().cloned()).collect();
                    g.sort_unstable();
                    g
                })
                .collect();
            next.sort();
            let mut child = tree.clone();
            child.levels.push(next);
            stack.push(child);
        }
    }
    trees.sort_by(|a, b| a.levels.cmp(&b.levels));
    let m = trees.iter().map(|t| t.final_count()).min().unwrap_or(d);
    Ok(EventualDecomposition { start: start.clone(), trees, m })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventualOutcome {
    Resolved(EventualDecomposition),
    Indeterminate { start: BlockDecomposition, left: Vec<usize>, right: Vec<usize> },
}

/// Everything the existence predictor consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAnalysis {
    pub class: CouplingClass,
    pub degree_d: usize,
    pub exact: bool,
    pub decompositions: Vec<BlockDecomposition>,
    /// forces[a] are the level-0 forces of decompositions[a], pairs in (s < t) order.
    pub forces: Vec<Vec<ForceEstimate>>,
    pub eventual: Vec<EventualOutcome>,
    /// Smallest eventual degree, when every eventual decomposition resolved.
    pub degree_m: Option<usize>,
}

/// Decompositions, forces (with `profiles[j]` as the shape of component j) and eventual
/// decompositions.
pub fn analyze(spec: &SystemSpec, profiles: &[RadialProfile], r_grid: &[f64]) -> Result<BlockAnalysis> {
    let g = SignGraph::from_spec(spec);
    let opt = optimal_decompositions(&g);
    let class = classify_with(&g, &opt);
    let mut forces = Vec::new();
    let mut eventual = Vec::new();
    for dec in &opt.decompositions {
        let fs = block_forces(spec, dec, profiles, r_grid)?;
        let d = dec.degree();
        let lookup = |s: usize, t: usize| {
            let (s, t) = if s < t { (s, t) } else { (t, s) };
            let idx = s * d - s * (s + 1) / 2 + (t - s - 1);
            let f = &fs[idx];
            match f.sign {
                ForceSign::Indeterminate => None,
                _ => Some(f.value),
            }
        };
        eventual.push(match eventual_decomposition(dec, lookup) {
            Ok(e) => EventualOutcome::Resolved(e),
            Err(Error::IndeterminateForce { left, right }) => {
                EventualOutcome::Indeterminate { start: dec.clone(), left, right }
            }
            Err(e) => return Err(e),
        });
        forces.push(fs);
    }
    let degree_m = eventual
        .iter()
        .map(|e| match e {
            EventualOutcome::Resolved(e) => Some(e.m),
            EventualOutcome::Indeterminate { .. } => None,
        })
        .collect::<Option<Vec<usize>>>()
        .and_then(|v| v.into_iter().min());
    Ok(BlockAnalysis { class, degree_d: opt.degree, exact: opt.exact, decompositions: opt.decompositions, forces, eventual, degree_m })
}

/// Coupling-size thresholds standing in for the non-constructive small/large constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Positive couplings below this count as small.
    pub beta_small: f64,
    /// Positive couplings above this count as large.
    pub beta_large: f64,
    /// Relative spread allowed inside a clique of large couplings (β and λ alike).
    pub near_equal: f64,
}

impl Thresholds {
    /// beta_small = 0.1·min √(μ_i μ_j); `beta_large` is supplied by the caller (normally the
    /// numerically computed two-component threshold).
    pub fn with_defaults(spec: &SystemSpec, beta_large: f64) -> Self {
        let mut m = f64::INFINITY;
        for i in 0..spec.k {
            for j in i + 1..spec.k {
                m = m.min(sqrt(spec.mu[i] * spec.mu[j]));
            }
        }
        if !m.is_finite() {
            m = spec.mu[0];
        }
        Self { beta_small: 0.1 * m, beta_large, near_equal: 0.05 }
    }
}

/// β_ij = ±δ^{t_ij}·β̂_ij, sign taken from the system.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaScaling {
    pub delta: f64,
    /// Row-major k×k exponents (diagonal ignored).
    pub t: Vec<f64>,
    /// Row-major k×k positive magnitudes (diagonal ignored).
    pub beta_hat: Vec<f64>,
}

impl DeltaScaling {
    /// Build the coupling magnitudes δ^t·β̂; `sign(i, j)` chooses each sign.
    pub fn couplings(&self, k: usize, sign: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        let mut b = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    b[i][j] = sign(i, j) * powf(self.delta, self.t[i * k + j]) * self.beta_hat[i * k + j];
                }
            }
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Exists,
    NotExists,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistencePrediction {
    pub verdict: Verdict,
    pub morse_index_range: Option<(usize, usize)>,
    /// Descriptive name of the rule whose hypotheses were all met.
    pub matched_rule: Option<&'static str>,
    pub unmet_hypotheses: Vec<String>,
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
}

pub const RULE_REPULSIVE_DEFINITE: &str = "repulsive-positive-definite-nonexistence";
pub const RULE_DELTA_GENERAL: &str = "total-mixed-small-coupling-nonexistence";
pub const RULE_DELTA_THREE: &str = "three-component-weak-repulsion-nonexistence";
pub const RULE_DELTA_PATH: &str = "four-component-path-nonexistence";
pub const RULE_EVENTUAL_ONE: &str = "eventual-degree-one-existence";

fn pair_label(i: usize, j: usize) -> String {
    format!("beta[{}][{}]", i + 1, j + 1)
}

fn delta_consistency(spec: &SystemSpec, ds: &DeltaScaling) -> Vec<String> {
    let k = spec.k;
    let mut bad = Vec::new();
    if ds.t.len() != k * k || ds.beta_hat.len() != k * k {
        bad.push(format!("delta-scaling tables must be {k}x{k}"));
        return bad;
    }
    if !(ds.delta > 0.0 && ds.delta < 1.0) {
        bad.push(format!("delta = {} is not in (0, 1)", ds.delta));
    }
    for i in 0..k {
        for j in i + 1..k {
            let b = spec.beta(i, j);
            let (t, bh) = (ds.t[i * k + j], ds.beta_hat[i * k + j]);
            if !(t > 0.0 && bh > 0.0) {
                bad.push(format!("{}: exponent and magnitude must be positive", pair_label(i, j)));
                continue;
            }
            let model = powf(ds.delta, t) * bh;
            if abs(abs(b) - model) > 1e-9 * abs(b) {
                bad.push(format!("{} = {b} differs from delta^t * beta_hat = {model}", pair_label(i, j)));
            }
        }
    }
    bad
}

/// General δ-scaling rule for one optimal decomposition; returns the failed hypotheses.
fn delta_general(spec: &SystemSpec, ds: &DeltaScaling, dec: &BlockDecomposition) -> Vec<String> {
    let k = spec.k;
    let t = |i: usize, j: usize| ds.t[i * k + j];
    let mut unmet = Vec::new();
    let mut t0: Option<f64> = None;
    let mut t_min_int_plus = f64::INFINITY;
    let mut t_max_minus = f64::NEG_INFINITY;
    let mut t_min_plus = f64::INFINITY;
    let mut uniform = true;
    for i in 0..k {
        for j in i + 1..k {
            let positive = spec.beta(i, j) > 0.0;
            let same = dec.block_of(i) == dec.block_of(j);
            if same {
                match t0 {
                    None => t0 = Some(t(i, j)),
                    Some(v) if abs(v - t(i, j)) > 1e-12 * v.max(1.0) => uniform = false,
                    _ => {}
                }
            } else if positive {
                t_min_int_plus = t_min_int_plus.min(t(i, j));
            }
            if positive {
                t_min_plus = t_min_plus.min(t(i, j));
            } else {
                t_max_minus = t_max_minus.max(t(i, j));
            }
        }
    }
    if !uniform {
        unmet.push(format!("{}: inner-coupling exponents are not all equal", dec.label()));
    }
    if let Some(t0) = t0 {
        if !(t0 < t_min_int_plus) {
            unmet.push(format!("{}: t0 = {t0} is not below t_min,int,+ = {t_min_int_plus}", dec.label()));
        }
    }
    if !(t_max_minus < t_min_plus) {
        unmet.push(format!("t_max,- = {t_max_minus} is not below t_min,+ = {t_min_plus}"));
    }
    let mut min_pos = f64::INFINITY;
    let mut max_neg = f64::NEG_INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let m = sqrt(spec.lambda[i].min(spec.lambda[j]));
            if spec.beta(i, j) > 0.0 {
                min_pos = min_pos.min(m);
            } else {
                max_neg = max_neg.max(m);
            }
        }
    }
    if !(min_pos >= max_neg) {
        unmet.push("some attractive pair decays faster than a repulsive pair".into());
    }
    unmet
}

fn delta_three(spec: &SystemSpec, ds: &DeltaScaling) -> Vec<String> {
    let k = 3;
    let neg: Vec<(usize, usize)> =
        [(0, 1), (0, 2), (1, 2)].into_iter().filter(|&(i, j)| spec.beta(i, j) < 0.0).collect();
    if neg.len() != 1 {
        return vec!["three-component rule needs exactly one repulsive pair".into()];
    }
    let (a, b) = neg[0];
    let c = 3 - a - b;
    let t = |i: usize, j: usize| ds.t[i * k + j];
    let mut unmet = Vec::new();
    let lam = &spec.lambda;
    if !(lam[c] >= lam[a].min(lam[b])) {
        unmet.push(format!("lambda[{}] < min(lambda[{}], lambda[{}])", c + 1, a + 1, b + 1));
    }
    if !(t(a, b) < t(c, a).min(t(c, b))) {
        unmet.push(format!("repulsive exponent {} is not below both attractive exponents", t(a, b)));
    }
    unmet
}

/// Positive graph a–b–c–d on four vertices; returns (a, b, c, d).
fn as_path(g: &SignGraph) -> Option<[usize; 4]> {
    if g.k != 4 {
        return None;
    }
    let deg: Vec<usize> = (0..4).map(|i| (0..4).filter(|&j| j != i && g.positive(i, j)).count()).collect();
    let edges: usize = deg.iter().sum::<usize>() / 2;
    if edges != 3 || deg.iter().filter(|&&d| d == 1).count() != 2 || deg.iter().filter(|&&d| d == 2).count() != 2 {
        return None;
    }
    let a = (0..4).find(|&i| deg[i] == 1)?;
    let b = (0..4).find(|&j| j != a && g.positive(a, j))?;
    let c = (0..4).find(|&j| j != a && j != b && g.positive(b, j))?;
    let d = (0..4).find(|&j| j != b && j != c && g.positive(c, j))?;
    Some([a, b, c, d])
}

fn delta_path(spec: &SystemSpec, ds: &DeltaScaling, g: &SignGraph) -> Vec<String> {
    let Some([a, b, c, d]) = as_path(g) else {
        return vec!["four-component rule needs the attractive couplings to form a path".into()];
    };
    let k = 4;
    let t = |i: usize, j: usize| ds.t[i * k + j];
    let mut unmet = Vec::new();
    let t_mid = t(b, c);
    let t_neg = t(a, c).max(t(b, d)).max(t(a, d));
    if !(t_neg < t_mid && t_mid < t(a, b).min(t(c, d))) {
        unmet.push(format!(
            "exponent ordering fails: repulsive max {t_neg}, middle {t_mid}, ends {} / {}",
            t(a, b),
            t(c, d)
        ));
    }
    let lam = &spec.lambda;
    if !(lam[a].min(lam[d]) < lam[b].min(lam[c])) {
        unmet.push(format!(
            "min(lambda[{}], lambda[{}]) is not below min(lambda[{}], lambda[{}])",
            a + 1,
            d + 1,
            b + 1,
            c + 1
        ));
    }
    unmet
}

/// Applies, in order: repulsive classes with positive-definite Θ; the δ-scaling rules;
/// eventual degree one with the coupling thresholds. Anything else is Indeterminate.
pub fn predict_existence(
    spec: &SystemSpec,
    thresholds: Thresholds,
    delta: Option<&DeltaScaling>,
    analysis: &BlockAnalysis,
) -> ExistencePrediction {
    let k = spec.k;
    let g = SignGraph::from_spec(spec);
    let mut unmet = Vec::new();
    let mut notes = Vec::new();
    let done = |verdict, range, rule, unmet: Vec<String>, notes: Vec<String>| ExistencePrediction {
        verdict,
        morse_index_range: range,
        matched_rule: rule,
        unmet_hypotheses: unmet,
        thresholds,
        notes,
    };

    if matches!(analysis.class, CouplingClass::PurelyRepulsive | CouplingClass::RepulsiveMixed) {
        if spec.theta_positive_definite() {
            return done(Verdict::NotExists, None, Some(RULE_REPULSIVE_DEFINITE), unmet, notes);
        }
        unmet.push(format!("{} couplings but the coupling matrix is not positive definite", analysis.class.name()));
    }

    if analysis.class == CouplingClass::TotalMixed {
        match delta {
            None => unmet.push("no delta-scaling parameters supplied".into()),
            Some(ds) => {
                let bad = delta_consistency(spec, ds);
                if !bad.is_empty() {
                    unmet.extend(bad);
                } else {
                    notes.push("delta-scaling verdicts hold for delta sufficiently small".into());
                    let mut general_failures = Vec::new();
                    for dec in &analysis.decompositions {
                        let f = delta_general(spec, ds, dec);
                        if f.is_empty() {
                            return done(Verdict::NotExists, None, Some(RULE_DELTA_GENERAL), Vec::new(), notes);
                        }
                        general_failures.extend(f);
                    }
                    if k == 3 {
                        let f = delta_three(spec, ds);
                        if f.is_empty() {
                            return done(Verdict::NotExists, None, Some(RULE_DELTA_THREE), Vec::new(), notes);
                        }
                        unmet.extend(f);
                    }
                    if k == 4 && as_path(&g).is_some() {
                        let f = delta_path(spec, ds, &g);
                        if f.is_empty() {
                            return done(Verdict::NotExists, None, Some(RULE_DELTA_PATH), Vec::new(), notes);
                        }
                        unmet.extend(f);
                    }
                    general_failures.dedup();
                    unmet.extend(general_failures);
                }
            }
        }
    }

    // existence: every eventual decomposition ends in a single block
    let mut eventual_ok = true;
    for e in &analysis.eventual {
        match e {
            EventualOutcome::Resolved(ev) => {
                if ev.m_max() > 1 {
                    eventual_ok = false;
                    unmet.push(format!("eventual decomposition of {} ends with {} blocks", ev.start.label(), ev.m_max()));
                }
            }
            EventualOutcome::Indeterminate { start, left, right } => {
                eventual_ok = false;
                unmet.push(format!(
                    "force between {} and {} in {} is below quadrature noise",
                    set_label(left),
                    set_label(right),
                    start.label()
                ));
            }
        }
    }
    if !eventual_ok {
        return done(Verdict::Indeterminate, None, None, unmet, notes);
    }

    let mut large = Vec::new();
    let mut threshold_ok = true;
    for i in 0..k {
        for j in i + 1..k {
            let b = spec.beta(i, j);
            if b <= 0.0 || b < thresholds.beta_small {
                continue;
            }
            if b > thresholds.beta_large {
                large.push((i, j));
            } else {
                threshold_ok = false;
                unmet.push(format!(
                    "{} = {b} lies between beta_small = {} and beta_large = {}",
                    pair_label(i, j),
                    thresholds.beta_small,
                    thresholds.beta_large
                ));
            }
        }
    }
    // connected components of the large-coupling graph
    let mut comp: Vec<usize> = (0..k).collect();
    fn root(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    for &(i, j) in &large {
        let (a, b) = (root(&mut comp, i), root(&mut comp, j));
        comp[a.max(b)] = a.min(b);
    }
    let roots: Vec<usize> = (0..k).map(|i| root(&mut comp, i)).collect();
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        match cliques.iter_mut().find(|c| roots[c[0]] == roots[i]) {
            Some(c) => c.push(i),
            None => cliques.push(vec![i]),
        }
    }
    cliques.retain(|c| c.len() > 1);
    for c in &cliques {
        let all_large = c.iter().enumerate().all(|(a, &i)| c[a + 1..].iter().all(|&j| large.contains(&(i.min(j), i.max(j)))));
        if !all_large {
            threshold_ok = false;
            unmet.push(format!("large couplings on {} do not form a clique", set_label(c)));
            continue;
        }
        if c.len() >= 3 {
            let vals: Vec<f64> =
                c.iter().enumerate().flat_map(|(a, &i)| c[a + 1..].iter().map(move |&j| spec.beta(i, j))).collect();
            let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
            if hi - lo > thresholds.near_equal * hi {
                threshold_ok = false;
                unmet.push(format!("large couplings on {} are not nearly equal", set_label(c)));
            }
            let (ll, lh) = c.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &i| (l.min(spec.lambda[i]), h.max(spec.lambda[i])));
            if lh - ll > thresholds.near_equal * lh {
                threshold_ok = false;
                unmet.push(format!("lambda values on {} are not nearly equal", set_label(c)));
            }
        }
    }
    if !threshold_ok {
        return done(Verdict::Indeterminate, None, None, unmet, notes);
    }
    let gamma = k - cliques.iter().map(|c| c.len() - 1).sum::<usize>();
    notes.push(format!(
        "conditional on beta_small = {} and beta_large = {} bounding the true thresholds",
        thresholds.beta_small, thresholds.beta_large
    ));
    done(Verdict::Exists, Some((gamma, gamma)), Some(RULE_EVENTUAL_ONE), Vec::new(), notes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_system, SystemParams};
    use crate::scalar::solve_scalar_radial;
    use proptest::prelude::*;

    fn graph(k: usize, positive: &[(usize, usize)]) -> SignGraph {
        SignGraph::from_fn(k, |i, j| positive.contains(&(i, j)))
    }

    fn spec(lambda: &[f64], beta: &[(usize, usize, f64)]) -> SystemSpec {
        let k = lambda.len();
        let mut b = vec![vec![0.0; k]; k];
        for &(i, j, v) in beta {
            b[i][j] = v;
            b[j][i] = v;
        }
        build_system(&SystemParams { n: 1, k, lambda: lambda.to_vec(), mu: vec![1.0; k], beta: b }).unwrap()
    }

    fn case_h() -> SignGraph {
        graph(4, &[(0, 1), (0, 2), (1, 3)])
    }

    #[test]
    fn attractive_and_repulsive_degrees() {
        let att = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        let o = optimal_decompositions(&att);
        assert_eq!(o.degree, 1);
        assert_eq!(o.decompositions[0].label(), "{1,2,3}");
        assert_eq!(classify_couplings(&att), CouplingClass::PurelyAttractive);
        let rep = graph(3, &[]);
        let o = optimal_decompositions(&rep);
        assert_eq!(o.degree, 3);
        assert_eq!(o.decompositions.len(), 1);
        assert_eq!(classify_couplings(&rep), CouplingClass::PurelyRepulsive);
        assert_eq!(classify_couplings(&graph(2, &[])), CouplingClass::PurelyRepulsive);
    }

    #[test]
    fn path_graph_cover() {
        // attractive pairs 1-2, 1-3, 2-4: {1,3} and {2,4} are both attractive cliques
        let o = optimal_decompositions(&case_h());
        assert_eq!(o.degree, 2);
        let labels: Vec<String> = o.decompositions.iter().map(|d| d.label()).collect();
        assert_eq!(labels, ["{1,3}|{2,4}"]);
        assert_eq!(classify_couplings(&case_h()), CouplingClass::TotalMixed);
    }

    #[test]
    fn mixed_three_component_classes() {
        assert_eq!(classify_couplings(&graph(3, &[(0, 1)])), CouplingClass::RepulsiveMixed);
        assert_eq!(classify_couplings(&graph(3, &[(0, 1), (0, 2)])), CouplingClass::TotalMixed);
    }

    #[test]
    fn decomposition_cuts_and_lookup() {
        let d = BlockDecomposition::from_blocks(vec![vec![3], vec![2, 0], vec![1]]);
        assert_eq!(d.permutation, vec![0, 2, 1, 3]);
        assert_eq!(d.cuts, vec![0, 2, 3, 4]);
        assert_eq!(d.block_of(2), 0);
        assert_eq!(d.block_of(3), 2);
    }

    #[test]
    fn greedy_cover_above_exact_limit() {
        let g = SignGraph::from_fn(14, |i, j| (i + j) % 2 == 0);
        let o = optimal_decompositions(&g);
        assert!(!o.exact);
        assert_eq!(o.degree, 2);
    }

    fn profiles(lambda: &[f64], h: f64) -> Vec<RadialProfile> {
        lambda.iter().map(|&l| solve_scalar_radial(l, 1.0, 1, 40.0, h).unwrap().profile).collect()
    }

    #[test]
    fn slower_attractive_tail_wins() {
        let s = spec(&[1.0, 4.0, 4.0], &[(0, 1, 0.05), (0, 2, 0.05), (1, 2, -0.05)]);
        let p = profiles(&s.lambda, 0.02);
        let grid = force_r_grid(1.0, 0.02);
        assert_eq!(grid.len(), 64);
        let f = interaction_force(&s, &[0, 1], &[2], &p, &grid).unwrap();
        assert_eq!(f.sign, ForceSign::Attractive);
        assert_eq!(f.terms.len(), 2);
    }

    #[test]
    fn force_symmetry_and_linearity() {
        let s = spec(&[1.0, 2.0, 1.5], &[(0, 1, 0.3), (0, 2, -0.2), (1, 2, 0.1)]);
        let p = profiles(&s.lambda, 0.05);
        let grid = force_r_grid(1.0, 0.05);
        let a = interaction_force(&s, &[0], &[1, 2], &p, &grid).unwrap();
        let b = interaction_force(&s, &[1, 2], &[0], &p, &grid).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.1 - y.1).abs() <= 1e-10 * x.1.abs());
        }
        let s2 = spec(&[1.0, 2.0, 1.5], &[(0, 1, 0.6), (0, 2, -0.2), (1, 2, 0.1)]);
        let c = interaction_force(&s2, &[0], &[1], &p, &grid).unwrap();
        let d = interaction_force(&s, &[0], &[1], &p, &grid).unwrap();
        for (x, y) in c.samples.iter().zip(&d.samples) {
            assert!((x.1 - 2.0 * y.1).abs() <= 1e-13 * x.1.abs());
        }
    }

    #[test]
    fn repulsive_pair_force_is_negative_everywhere() {
        let s = spec(&[1.0, 1.0, 2.0, 2.5], &[(0, 1, 0.05), (0, 2, 0.05), (1, 3, 0.05), (0, 3, -0.005), (1, 2, -0.005), (2, 3, -0.005)]);
        let p = profiles(&s.lambda, 0.05);
        let f = interaction_force(&s, &[2], &[3], &p, &force_r_grid(1.0, 0.05)).unwrap();
        assert_eq!(f.sign, ForceSign::Repulsive);
        assert!(f.samples.iter().all(|x| x.1 < 0.0));
    }

    #[test]
    fn underflowing_overlaps_are_indeterminate() {
        let s = spec(&[1.0, 1.0], &[(0, 1, 0.1)]);
        let p = profiles(&s.lambda, 0.05);
        let f = interaction_force(&s, &[0], &[1], &p, &[200.0, 300.0]).unwrap();
        assert_eq!(f.sign, ForceSign::Indeterminate);
        assert!(interaction_force(&s, &[0], &[1], &p, &[1.0]).is_err());
    }

    #[test]
    fn eventual_merges_for_path_graph() {
        let dec = BlockDecomposition::from_blocks(vec![vec![0, 1], vec![2], vec![3]]);
        // blocks 0-1 attract, 1-2 repel, 0-2 attract; composite {0,1} vs {2}: 0.5 - 0.2 > 0
        let f = |s: usize, t: usize| match (s, t) {
            (0, 1) => Some(1.0),
            (0, 2) => Some(0.5),
            (1, 2) => Some(-0.2),
            _ => unreachable!(),
        };
        let e = eventual_decomposition(&dec, f).unwrap();
        assert_eq!(e.m, 1);
        assert_eq!(e.m_max(), 1);
        assert!(e.trees.iter().all(|t| t.levels.len() == 3));
        assert_eq!(e.final_components(0), vec![vec![0, 1, 2, 3]]);

        let g = |s: usize, t: usize| if (s, t) == (1, 2) { Some(1.0) } else { Some(-1.0) };
        let e = eventual_decomposition(&dec, g).unwrap();
        assert_eq!(e.m, 2);

        let all_neg = |_: usize, _: usize| Some(-1.0);
        let e = eventual_decomposition(&dec, all_neg).unwrap();
        assert_eq!((e.m, e.trees.len(), e.trees[0].levels.len()), (3, 1, 1));

        let none = |s: usize, _: usize| if s == 0 { None } else { Some(1.0) };
        assert!(matches!(eventual_decomposition(&dec, none), Err(Error::IndeterminateForce { .. })));
    }

    #[test]
    fn eventual_enumerates_competing_merges() {
        let dec = BlockDecomposition::from_blocks(vec![vec![0], vec![1], vec![2]]);
        // 0 attracts both, 1 and 2 repel strongly: two maximal first merges, both stall
        let f = |s: usize, t: usize| if s == 0 { Some(0.1) } else { let _ = t; Some(-1.0) };
        let e = eventual_decomposition(&dec, f).unwrap();
        assert_eq!(e.trees.len(), 2);
        assert_eq!(e.m, 2);
    }

    fn th() -> Thresholds {
        Thresholds { beta_small: 0.1, beta_large: 1.7, near_equal: 0.05 }
    }

    #[test]
    fn weak_attraction_with_fast_repulsion_exists() {
        let s = spec(&[1.0, 2.0, 2.5], &[(0, 1, 0.05), (0, 2, 0.05), (1, 2, -0.05)]);
        let p = profiles(&s.lambda, 0.05);
        let a = analyze(&s, &p, &force_r_grid(1.0, 0.05)).unwrap();
        assert_eq!(a.class, CouplingClass::TotalMixed);
        assert_eq!(a.degree_d, 2);
        assert_eq!(a.degree_m, Some(1));
        let pr = predict_existence(&s, th(), None, &a);
        assert_eq!(pr.verdict, Verdict::Exists, "{pr:?}");
        assert_eq!(pr.morse_index_range, Some((3, 3)));

        let s2 = spec(&[1.0, 2.0, 2.5], &[(0, 1, 3.4), (0, 2, 0.05), (1, 2, -0.05)]);
        let a2 = analyze(&s2, &p, &force_r_grid(1.0, 0.05)).unwrap();
        let pr2 = predict_existence(&s2, th(), None, &a2);
        assert_eq!(pr2.morse_index_range, Some((2, 2)), "{pr2:?}");

        let s3 = spec(&[1.0, 2.0, 2.5], &[(0, 1, 0.5), (0, 2, 0.05), (1, 2, -0.05)]);
        let a3 = analyze(&s3, &p, &force_r_grid(1.0, 0.05)).unwrap();
        let pr3 = predict_existence(&s3, th(), None, &a3);
        assert_eq!(pr3.verdict, Verdict::Indeterminate);
        assert!(pr3.unmet_hypotheses.iter().any(|u| u.contains("between")), "{pr3:?}");
    }

    #[test]
    fn definite_repulsive_mixed_does_not_exist() {
        let s = spec(&[1.0, 1.0, 1.0], &[(0, 1, 0.2), (0, 2, -0.1), (1, 2, -0.1)]);
        let p = profiles(&s.lambda, 0.05);
        let a = analyze(&s, &p, &force_r_grid(1.0, 0.05)).unwrap();
        assert_eq!(a.class, CouplingClass::RepulsiveMixed);
        assert!(a.degree_m.unwrap() > 1);
        let pr = predict_existence(&s, th(), None, &a);
        assert_eq!((pr.verdict, pr.matched_rule), (Verdict::NotExists, Some(RULE_REPULSIVE_DEFINITE)));

        let s = spec(&[1.0, 1.0, 1.0], &[(0, 1, 0.2), (0, 2, -2.0), (1, 2, -2.0)]);
        let a = analyze(&s, &p, &force_r_grid(1.0, 0.05)).unwrap();
        let pr = predict_existence(&s, th(), None, &a);
        assert_eq!(pr.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn delta_scaled_three_component_does_not_exist() {
        let ds = DeltaScaling {
            delta: 1e-2,
            t: vec![0.0, 1.0, 2.0, 1.0, 0.0, 0.5, 2.0, 0.5, 0.0],
            beta_hat: vec![1.0; 9],
        };
        let b = ds.couplings(3, |i, j| if i + j == 3 { -1.0 } else { 1.0 });
        let s = build_system(&SystemParams { n: 1, k: 3, lambda: vec![2.0, 1.0, 1.0], mu: vec![1.0; 3], beta: b }).unwrap();
        let p = profiles(&s.lambda, 0.05);
        let a = analyze(&s, &p, &force_r_grid(1.0, 0.05)).unwrap();
        let pr = predict_existence(&s, th(), Some(&ds), &a);
        assert_eq!(pr.verdict, Verdict::NotExists, "{pr:?}");
        assert!(pr.matched_rule == Some(RULE_DELTA_GENERAL) || pr.matched_rule == Some(RULE_DELTA_THREE));
        assert!(delta_three(&s, &ds).is_empty());

        // wrong λ ordering breaks both rules
        let s = build_system(&SystemParams { n: 1, k: 3, lambda: vec![0.5, 1.0, 1.0], mu: vec![1.0; 3], beta: ds.couplings(3, |i, j| if i + j == 3 { -1.0 } else { 1.0 }) }).unwrap();
        assert!(!delta_three(&s, &ds).is_empty());
        let a = analyze(&s, &profiles(&s.lambda, 0.05), &force_r_grid(0.5, 0.05)).unwrap();
        assert_ne!(predict_existence(&s, th(), Some(&ds), &a).verdict, Verdict::NotExists);
    }

    #[test]
    fn delta_scaled_path_does_not_exist() {
        // path 3-1-2-4 (0-based 2-0-1-3)
        let mut t = vec![0.0; 16];
        let mut set = |i: usize, j: usize, v: f64| {
            t[i * 4 + j] = v;
            t[j * 4 + i] = v;
        };
        set(0, 1, 1.0);
        set(0, 2, 2.0);
        set(1, 3, 2.0);
        set(1, 2, 0.5);
        set(0, 3, 0.5);
        set(2, 3, 0.5);
        let ds = DeltaScaling { delta: 1e-2, t, beta_hat: vec![1.0; 16] };
        let g = case_h();
        let b = ds.couplings(4, |i, j| if g.positive(i, j) { 1.0 } else { -1.0 });
        let s = build_system(&SystemParams { n: 1, k: 4, lambda: vec![2.0, 2.0, 1.0, 1.0], mu: vec![1.0; 4], beta: b }).unwrap();
        assert!(delta_path(&s, &ds, &g).is_empty());
        assert_eq!(as_path(&g), Some([2, 0, 1, 3]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn decompositions_are_permutation_invariant(k in 2usize..7, bits in any::<u32>(), seed in any::<u64>()) {
            let g = SignGraph::from_fn(k, |i, j| bits >> ((i * k + j) % 32) & 1 == 1);
            let mut perm: Vec<usize> = (0..k).collect();
            let mut st = seed;
            for i in (1..k).rev() {
                st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (st >> 33) as usize % (i + 1));
            }
            let gp = g.permuted(&perm);
            let a = optimal_decompositions(&g);
            let b = optimal_decompositions(&gp);
            prop_assert_eq!(a.degree, b.degree);
            prop_assert_eq!(classify_with(&g, &a), classify_with(&gp, &b));
            // map b back to original labels
            let mut back: Vec<BlockDecomposition> = b.decompositions.iter()
                .map(|d| BlockDecomposition::from_blocks(d.blocks().iter().map(|bl| bl.iter().map(|&x| perm[x]).collect()).collect()))
                .collect();
            back.sort();
            prop_assert_eq!(back, a.decompositions.clone());
            prop_assert!(a.decompositions.iter().all(|d| d.blocks().iter().all(|bl| g.is_clique(bl))));
            prop_assert_eq!(a.degree == 1, g.all_positive());
            if g.all_negative() { prop_assert_eq!(a.degree, k); }
        }

        #[test]
        fn eventual_degree_bounds(k in 2usize..7, bits in any::<u32>(), fbits in any::<u64>()) {
            let g = SignGraph::from_fn(k, |i, j| bits >> ((i * k + j) % 32) & 1 == 1);
            let opt = optimal_decompositions(&g);
            let class = classify_with(&g, &opt);
            for dec in &opt.decompositions {
                let d = dec.degree();
                // signed synthetic forces consistent with the couplings: blocks with only
                // repulsive cross couplings always repel
                let f = |s: usize, t: usize| {
                    let any_pos = dec.block(s).iter().any(|&i| dec.block(t).iter().any(|&j| g.positive(i, j)));
                    let r = 1.0 + ((fbits >> ((s * d + t) % 64)) & 1) as f64;
                    Some(if any_pos && (fbits >> ((s + 7 * t) % 64)) & 1 == 1 { r } else { -r })
                };
                let e = eventual_decomposition(dec, f).unwrap();
                prop_assert!(1 <= e.m && e.m <= d && d <= k);
                if matches!(class, CouplingClass::PurelyRepulsive | CouplingClass::RepulsiveMixed) && isolated_repulsive_block(&g, dec).is_some() {
                    prop_assert!(e.m > 1);
                }
            }
        }
    }
}
