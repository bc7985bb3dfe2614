//! Per-scenario task pipelines and their report sections.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cnls_core::blocks::{
    analyze, force_r_grid, optimal_decompositions, predict_existence, BlockAnalysis, EventualOutcome, ExistencePrediction,
    ForceSign, SignGraph, Thresholds, Verdict,
};
use cnls_core::model::{set_label, ConstraintPartition, FieldVector, SystemSpec};
use cnls_core::overlap::{decay_fit, decay_sweep, linear_r_grid, FitModel};
use cnls_core::scalar::{pohozaev_residual, solve_scalar_radial, ScalarSoliton};
use cnls_core::solver::{
    beta_bar_radial, check_attainment, ground_state_search, initial_placements, minimize_ansatz, sweep_separation,
    AnsatzOptions, AttainmentReport, Diagnosis, GroundStateResult, MinimizeOptions, SearchRun, SeparationCurve, SideState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Scenario, Task};
use crate::output::{write_nlsb, write_sweep_csv};

/// Tolerance overrides from the command line; they win over the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol_split: Option<f64>,
    pub tol_g: Option<f64>,
    pub tol_e: Option<f64>,
    pub zero_tol_factor: Option<f64>,
}

pub const POHOZAEV_TOL: f64 = 1e-6;
pub const DEFAULT_WINDOW: (f64, f64) = (6.0, 14.0);

#[derive(Debug, Clone, Serialize)]
pub struct SystemOut {
    pub n: usize,
    pub k: usize,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// Full k×k coupling matrix with μ on the diagonal.
    pub theta: Vec<Vec<f64>>,
    pub decoupled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationOut {
    pub class: &'static str,
    pub degree_d: usize,
    /// False when the clique cover fell back to the greedy bound.
    pub exact: bool,
    pub decompositions: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarOut {
    pub component: usize,
    pub lambda: f64,
    pub mu: f64,
    pub method: String,
    pub w0: f64,
    pub energy: f64,
    pub norm2: f64,
    pub norm4: f64,
    pub norm_lambda: f64,
    /// |λ‖w‖₂² - ((4-N)μ/4)‖w‖₄⁴| / λ‖w‖₂².
    pub pohozaev_residual: f64,
    pub pohozaev_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayOut {
    pub pair: String,
    pub rate: f64,
    pub expected_rate: f64,
    pub rate_rel_error: f64,
    pub rate_tol: f64,
    pub power: f64,
    pub expected_power: Option<f64>,
    pub power_tol: f64,
    pub correction: Option<f64>,
    pub window: (f64, f64),
    pub model: String,
    pub fit_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForceOut {
    pub decomposition: String,
    pub left: String,
    pub right: String,
    pub value: f64,
    pub argmax_r: f64,
    pub sign: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventualOut {
    pub start: String,
    /// Final groups of each tree, as component sets.
    pub finals: Vec<Vec<String>>,
    pub m: Option<usize>,
    pub m_max: Option<usize>,
    pub indeterminate_pair: Option<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionOut {
    pub verdict: &'static str,
    pub morse_index_range: Option<(usize, usize)>,
    pub matched_rule: Option<&'static str>,
    pub unmet_hypotheses: Vec<String>,
    pub notes: Vec<String>,
    pub beta_small: f64,
    pub beta_large: f64,
    pub near_equal: f64,
    /// Pairwise two-component attraction thresholds used for beta_large.
    pub beta_bar: Vec<(String, f64)>,
    pub degree_m: Option<usize>,
    pub forces: Vec<ForceOut>,
    pub force_noise_floor: f64,
    pub eventual: Vec<EventualOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOut {
    pub start: String,
    pub centers: Vec<f64>,
    pub energy: Option<f64>,
    pub diagnosis: Option<&'static str>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateOut {
    pub method: &'static str,
    pub partition: Vec<String>,
    pub energy: f64,
    pub diagnosis: &'static str,
    pub residuals: Vec<f64>,
    pub gradient_norm: Option<f64>,
    pub morse_index: Option<usize>,
    pub zero_modes: Option<usize>,
    pub inertia_negative: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub zero_tol: Option<f64>,
    pub centroids: Vec<f64>,
    pub masses: Vec<f64>,
    pub separation: f64,
    pub boundary_mass: Option<f64>,
    pub iterations: usize,
    pub runs: Vec<RunOut>,
    pub tol_g: f64,
    pub tol_e: f64,
    pub tol_split: f64,
    pub field_dump: Option<String>,
    pub note: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOut {
    pub split: String,
    pub limit: f64,
    pub side_energies: (f64, f64),
    pub min_r: Option<f64>,
    pub min_energy: Option<f64>,
    pub interior_minimum: bool,
    pub infeasible_points: usize,
    pub max_boundary_mass: f64,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitOut {
    pub split: String,
    pub limit: f64,
    pub margin: f64,
    pub cross_term: f64,
    pub interacting: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttainmentOut {
    pub verdict: &'static str,
    pub energy: f64,
    pub splits: Vec<SplitOut>,
    pub diverging_split: Option<String>,
    pub observed_split: String,
    pub separation: f64,
    pub tol_split: f64,
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub task: &'static str,
    pub seed: u64,
    pub system: Option<SystemOut>,
    pub classification: Option<ClassificationOut>,
    pub scalar: Option<Vec<ScalarOut>>,
    pub decay: Option<Vec<DecayOut>>,
    pub prediction: Option<PredictionOut>,
    pub sweeps: Option<Vec<SweepOut>>,
    pub ground_state: Option<GroundStateOut>,
    pub attainment: Option<AttainmentOut>,
    pub error: Option<String>,
}

impl ScenarioReport {
    fn empty(sc: &Scenario, seed: u64) -> Self {
        Self {
            name: sc.name.clone(),
            task: sc.task.name(),
            seed,
            system: None,
            classification: None,
            scalar: None,
            decay: None,
            prediction: None,
            sweeps: None,
            ground_state: None,
            attainment: None,
            error: None,
        }
    }

    pub fn indeterminate(&self) -> bool {
        self.prediction.as_ref().is_some_and(|p| p.verdict == "indeterminate")
    }
}

/// Wall-clock seconds per pipeline stage (kept out of the report so reports are reproducible).
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub scenario: String,
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

struct Clock {
    t: Timings,
    start: Instant,
}

impl Clock {
    fn new(name: &str) -> Self {
        Self { t: Timings { scenario: name.into(), ..Default::default() }, start: Instant::now() }
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let s = Instant::now();
        let out = f();
        self.t.stages.push((name.into(), s.elapsed().as_secs_f64()));
        out
    }

    fn finish(mut self) -> Timings {
        self.t.total = self.start.elapsed().as_secs_f64();
        self.t
    }
}

fn system_out(spec: &SystemSpec) -> SystemOut {
    SystemOut {
        n: spec.n,
        k: spec.k,
        lambda: spec.lambda.clone(),
        mu: spec.mu.clone(),
        theta: (0..spec.k).map(|i| (0..spec.k).map(|j| spec.beta(i, j)).collect()).collect(),
        decoupled: spec.decoupled,
    }
}

pub fn classify(spec: &SystemSpec) -> ClassificationOut {
    let g = SignGraph::from_spec(spec);
    let opt = optimal_decompositions(&g);
    ClassificationOut {
        class: cnls_core::blocks::classify_with(&g, &opt).name(),
        degree_d: opt.degree,
        exact: opt.exact,
        decompositions: opt.decompositions.iter().map(|d| d.label()).collect(),
    }
}

fn scalar_extent(sc: &Scenario, lambda: f64, reach: f64) -> f64 {
    sc.grid.extent.max(reach + 24.0 / lambda.sqrt()).max(40.0 / lambda.sqrt())
}

fn scalar_spacing(sc: &Scenario) -> f64 {
    match sc.system.n {
        1 => sc.grid.spacing.min(0.01),
        _ => sc.options.radial_step.unwrap_or(0.02).min(sc.grid.spacing),
    }
}

fn solitons(sc: &Scenario, spec: &SystemSpec, reach: f64) -> Result<Vec<ScalarSoliton>> {
    let h = scalar_spacing(sc);
    (0..spec.k)
        .map(|j| {
            solve_scalar_radial(spec.lambda[j], spec.mu[j], spec.n, scalar_extent(sc, spec.lambda[j], reach), h)
                .with_context(|| format!("scalar soliton for component {}", j + 1))
        })
        .collect()
}

pub fn scalar_section(sols: &[ScalarSoliton]) -> Vec<ScalarOut> {
    sols.iter()
        .enumerate()
        .map(|(j, s)| ScalarOut {
            component: j + 1,
            lambda: s.lambda,
            mu: s.mu,
            method: format!("{:?}", s.method).to_lowercase(),
            w0: s.w0(),
            energy: s.energy,
            norm2: s.norm2,
            norm4: s.norm4,
            norm_lambda: s.norm_lambda,
            pohozaev_residual: (pohozaev_residual(s) / (s.lambda * s.norm2)).abs(),
            pohozaev_tol: POHOZAEV_TOL,
        })
        .collect()
}

/// Prefactor power of the overlap law where it is pinned down: N = 1 (1 for equal rates, 0
/// otherwise) and N = 3 with equal rates (-1.5).
pub fn expected_power(n: usize, equal: bool) -> Option<f64> {
    match (n, equal) {
        (1, true) => Some(1.0),
        (1, false) => Some(0.0),
        (3, true) => Some(-1.5),
        _ => None,
    }
}

pub fn decay_section(sc: &Scenario, spec: &SystemSpec) -> Result<Vec<DecayOut>> {
    let window = sc.options.window.unwrap_or(DEFAULT_WINDOW);
    let lo = (window.0 - 1.0).max(0.0);
    let hi = window.1 + 1.0;
    let sols = solitons(sc, spec, hi)?;
    let grid = linear_r_grid(lo, hi, 81);
    let mut out = Vec::new();
    for (i, j) in sc.pairs()? {
        let equal = (spec.lambda[i] - spec.lambda[j]).abs() <= 1e-12 * spec.lambda[i];
        let sweep = decay_sweep(&sols[i].profile, &sols[j].profile, &grid)?;
        let model = FitModel::for_case(spec.n, equal);
        let fit = decay_fit(&sweep, window, model).with_context(|| format!("decay fit for pair {}", set_label(&[i, j])))?;
        let expected = 2.0 * spec.lambda[i].min(spec.lambda[j]).sqrt();
        out.push(DecayOut {
            pair: set_label(&[i, j]),
            rate: fit.rate,
            expected_rate: expected,
            rate_rel_error: (fit.rate - expected).abs() / expected,
            rate_tol: 0.02,
            power: fit.power,
            expected_power: expected_power(spec.n, equal),
            power_tol: if spec.n == 1 { 0.15 } else { 0.2 },
            correction: fit.correction,
            window,
            model: format!("{:?}", fit.model).to_lowercase(),
            fit_residual: fit.fit_residual,
            points: fit.points,
        });
    }
    Ok(out)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Exists => "exists",
        Verdict::NotExists => "not-exists",
        Verdict::Indeterminate => "indeterminate",
    }
}

fn sign_name(s: ForceSign) -> &'static str {
    match s {
        ForceSign::Attractive => "attractive",
        ForceSign::Repulsive => "repulsive",
        ForceSign::Indeterminate => "indeterminate",
    }
}

/// Largest pairwise β̄ over the system, with the per-pair values.
pub fn beta_bar_all(sc: &Scenario, spec: &SystemSpec) -> Result<(f64, Vec<(String, f64)>)> {
    let dr = sc.options.radial_step.unwrap_or(0.01);
    let mut per = Vec::new();
    let mut top = 0.0f64;
    for i in 0..spec.k {
        for j in i + 1..spec.k {
            let ext = 30.0 / spec.lambda[i].min(spec.lambda[j]).sqrt();
            let b = beta_bar_radial(spec.n, [spec.lambda[i], spec.lambda[j]], [spec.mu[i], spec.mu[j]], ext, dr)?;
            top = top.max(b.value);
            per.push((set_label(&[i, j]), b.value));
        }
    }
    Ok((top, per))
}

pub fn prediction_section(sc: &Scenario, spec: &SystemSpec) -> Result<(PredictionOut, ExistencePrediction, BlockAnalysis)> {
    let sols = solitons(sc, spec, 20.0 / spec.lambda_min().sqrt())?;
    let profiles: Vec<_> = sols.iter().map(|s| s.profile.clone()).collect();
    let r_grid = force_r_grid(spec.lambda_min(), profiles[0].h);
    let analysis = analyze(spec, &profiles, &r_grid)?;
    let (bb, per) = match sc.options.beta_large {
        Some(v) => (v, Vec::new()),
        None => beta_bar_all(sc, spec)?,
    };
    let mut th = Thresholds::with_defaults(spec, bb);
    if let Some(v) = sc.options.beta_small {
        th.beta_small = v;
    }
    if let Some(v) = sc.options.near_equal {
        th.near_equal = v;
    }
    let delta = sc.delta_scaling()?;
    let pred = predict_existence(spec, th, delta.as_ref(), &analysis);
    let mut forces = Vec::new();
    for (dec, fs) in analysis.decompositions.iter().zip(&analysis.forces) {
        for f in fs {
            forces.push(ForceOut {
                decomposition: dec.label(),
                left: set_label(&f.left),
                right: set_label(&f.right),
                value: f.value,
                argmax_r: f.argmax_r,
                sign: sign_name(f.sign),
            });
        }
    }
    let eventual = analysis
        .eventual
        .iter()
        .map(|e| match e {
            EventualOutcome::Resolved(ev) => EventualOut {
                start: ev.start.label(),
                finals: (0..ev.trees.len()).map(|t| ev.final_components(t).iter().map(|c| set_label(c)).collect()).collect(),
                m: Some(ev.m),
                m_max: Some(ev.m_max()),
                indeterminate_pair: None,
            },
            EventualOutcome::Indeterminate { start, left, right } => EventualOut {
                start: start.label(),
                finals: Vec::new(),
                m: None,
                m_max: None,
                indeterminate_pair: Some((set_label(left), set_label(right))),
            },
        })
        .collect();
    let out = PredictionOut {
        verdict: verdict_name(pred.verdict),
        morse_index_range: pred.morse_index_range,
        matched_rule: pred.matched_rule,
        unmet_hypotheses: pred.unmet_hypotheses.clone(),
        notes: pred.notes.clone(),
        beta_small: th.beta_small,
        beta_large: th.beta_large,
        near_equal: th.near_equal,
        beta_bar: per,
        degree_m: analysis.degree_m,
        forces,
        force_noise_floor: cnls_core::blocks::FORCE_NOISE,
        eventual,
    };
    Ok((out, pred, analysis))
}

fn minimize_options(sc: &Scenario, ov: &Overrides) -> MinimizeOptions {
    let d = MinimizeOptions::default();
    MinimizeOptions {
        tol_g: ov.tol_g.or(sc.options.tol_g).unwrap_or(d.tol_g),
        tol_e: ov.tol_e.or(sc.options.tol_e).unwrap_or(d.tol_e),
        tol_split: ov.tol_split.or(sc.options.tol_split).unwrap_or(d.tol_split),
        zero_tol_factor: ov.zero_tol_factor.or(sc.options.zero_tol_factor).unwrap_or(d.zero_tol_factor),
        max_iter: sc.options.max_iter.unwrap_or(d.max_iter),
        ..d
    }
}

fn starts(sc: &Scenario, spec: &SystemSpec, rng: &mut ChaCha8Rng) -> Vec<(String, Vec<f64>)> {
    let mut list: Vec<(String, Vec<f64>)> = match &sc.options.centers {
        Some(c) => c.iter().enumerate().map(|(i, v)| (format!("given #{}", i + 1), v.clone())).collect(),
        None => initial_placements(spec),
    };
    if let Some(s) = sc.options.center_jitter.filter(|s| *s > 0.0) {
        for (_, c) in list.iter_mut() {
            for v in c.iter_mut() {
                *v += rng.random_range(-s..=s);
            }
        }
    }
    list
}

fn run_out(r: &SearchRun) -> RunOut {
    RunOut {
        start: r.start.clone(),
        centers: r.centers.clone(),
        energy: r.energy,
        diagnosis: r.diagnosis.map(|d| d.name()),
        error: r.error.clone(),
    }
}

/// Ground state on `partition`; N = 1 uses the full grid, N = 2, 3 the translate ansatz.
#[allow(clippy::too_many_arguments)]
fn ground_state_section(
    sc: &Scenario,
    spec: &SystemSpec,
    partition: &ConstraintPartition,
    opts: &MinimizeOptions,
    rng: &mut ChaCha8Rng,
    out_dir: Option<&Path>,
) -> Result<(GroundStateOut, Option<GroundStateResult>)> {
    let list = starts(sc, spec, rng);
    let groups: Vec<String> = partition.groups.iter().map(|g| set_label(g)).collect();
    if spec.n == 1 {
        let grid = sc.grid()?;
        let centers: Vec<Vec<f64>> = list.iter().map(|(_, c)| c.clone()).collect();
        let mut outcome = ground_state_search(spec, &grid, partition, Some(&centers), opts)?;
        for (r, (label, _)) in outcome.runs.iter_mut().zip(&list) {
            r.start = label.clone();
        }
        let b = &outcome.best;
        let dump = if sc.options.dump_fields {
            match out_dir {
                Some(dir) => {
                    let name = format!("{}.nlsb", sc.name);
                    write_nlsb(&dir.join(&name), &b.fields)?;
                    Some(name)
                }
                None => None,
            }
        } else {
            None
        };
        let m = b.morse.as_ref();
        let out = GroundStateOut {
            method: "full-grid",
            partition: groups,
            energy: b.energy,
            diagnosis: b.diagnosis.name(),
            residuals: b.residuals.clone(),
            gradient_norm: Some(b.gradient_norm),
            morse_index: m.map(|m| m.index),
            zero_modes: m.map(|m| m.zero_modes),
            inertia_negative: m.map(|m| m.inertia_negative),
            eigenvalues: m.map(|m| m.eigenvalues.clone()).unwrap_or_default(),
            zero_tol: m.map(|m| m.zero_tol),
            centroids: b.centroids.clone(),
            masses: b.masses.clone(),
            separation: b.separation(),
            boundary_mass: Some(b.fields.boundary_mass()),
            iterations: b.iterations,
            runs: outcome.runs.iter().map(run_out).collect(),
            tol_g: opts.tol_g,
            tol_e: opts.tol_e,
            tol_split: opts.tol_split,
            field_dump: dump,
            note: (b.diagnosis == Diagnosis::SplittingDetected).then_some(cnls_core::solver::attainment::ATTAINMENT_NOTE),
        };
        let best = std::mem::replace(&mut outcome.best, empty_result(spec, &grid, partition)?);
        return Ok((out, Some(best)));
    }
    let ao = AnsatzOptions {
        dr: sc.options.radial_step.unwrap_or(0.05),
        extent: sc.grid.extent,
        max_iter: sc.options.max_iter.unwrap_or(5000),
        tol_e: opts.tol_e,
        ..AnsatzOptions::default()
    };
    let mut best: Option<cnls_core::solver::AnsatzResult> = None;
    let mut runs = Vec::new();
    for (label, c) in &list {
        match minimize_ansatz(spec, partition, c, &ao) {
            Ok(r) => {
                runs.push(RunOut { start: label.clone(), centers: c.clone(), energy: Some(r.energy), diagnosis: Some(r.diagnosis.name()), error: None });
                if best.as_ref().is_none_or(|b| r.energy < b.energy) {
                    best = Some(r);
                }
            }
            Err(e) => runs.push(RunOut { start: label.clone(), centers: c.clone(), energy: None, diagnosis: None, error: Some(e.to_string()) }),
        }
    }
    let Some(b) = best else { bail!("every ansatz run failed") };
    Ok((
        GroundStateOut {
            method: "translate-ansatz",
            partition: groups,
            energy: b.energy,
            diagnosis: b.diagnosis.name(),
            residuals: Vec::new(),
            gradient_norm: None,
            morse_index: None,
            zero_modes: None,
            inertia_negative: None,
            eigenvalues: Vec::new(),
            zero_tol: None,
            centroids: b.centers.clone(),
            masses: b.masses.clone(),
            separation: b.separation(),
            boundary_mass: None,
            iterations: b.iterations,
            runs,
            tol_g: opts.tol_g,
            tol_e: opts.tol_e,
            tol_split: opts.tol_split,
            field_dump: None,
            note: Some("translate ansatz: radial shapes with centers on the first axis; no Morse index"),
        },
        None,
    ))
}

fn empty_result(spec: &SystemSpec, grid: &cnls_core::model::Grid, partition: &ConstraintPartition) -> Result<GroundStateResult> {
    Ok(GroundStateResult {
        fields: FieldVector::zeros(grid.clone(), spec.k),
        energy: 0.0,
        partition: partition.clone(),
        residuals: Vec::new(),
        gradient_norm: 0.0,
        morse: None,
        centroids: Vec::new(),
        masses: Vec::new(),
        diagnosis: Diagnosis::MaxIterations,
        iterations: 0,
        history: Vec::new(),
    })
}

/// Two-sided splits to sweep: each block of each optimal decomposition against the rest.
pub fn sweep_splits(spec: &SystemSpec) -> Vec<(Vec<usize>, Vec<usize>)> {
    let opt = optimal_decompositions(&SignGraph::from_spec(spec));
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for dec in &opt.decompositions {
        if dec.degree() < 2 {
            continue;
        }
        let blocks = dec.blocks();
        let take = if blocks.len() == 2 { 1 } else { blocks.len() };
        for b in blocks.iter().take(take) {
            let mut left = b.clone();
            left.sort_unstable();
            let right: Vec<usize> = (0..spec.k).filter(|j| !left.contains(j)).collect();
            let (l, r) = if left[0] < right[0] { (left, right) } else { (right, left) };
            if !out.contains(&(l.clone(), r.clone())) {
                out.push((l, r));
            }
        }
    }
    out
}

/// Ground state of the subsystem on `set`, placed on the scenario grid.
pub fn side_state(spec: &SystemSpec, grid: &cnls_core::model::Grid, set: &[usize], opts: &MinimizeOptions) -> Result<SideState> {
    let sub = spec.subsystem(set);
    let o = MinimizeOptions { morse: false, record_history: false, ..opts.clone() };
    let r = ground_state_search(&sub, grid, &ConstraintPartition::singletons(set.len()), None, &o)
        .with_context(|| format!("ground state of side {}", set_label(set)))?;
    Ok(SideState { components: set.to_vec(), field: r.best.fields, energy: r.best.energy })
}

fn sweep_section(sc: &Scenario, spec: &SystemSpec, opts: &MinimizeOptions, out_dir: Option<&Path>) -> Result<(Vec<SweepOut>, Vec<SeparationCurve>)> {
    if spec.n != 1 {
        bail!("separation sweeps run on the N = 1 grid only");
    }
    let grid = sc.grid()?;
    let r_grid = match &sc.options.r_grid {
        Some(r) if r.geometric => cnls_core::overlap::geometric_r_grid(r.lo, r.hi, r.count),
        Some(r) => linear_r_grid(r.lo, r.hi, r.count),
        None => linear_r_grid(0.0, 12.0 / spec.lambda_min().sqrt(), 49),
    };
    let mut outs = Vec::new();
    let mut curves = Vec::new();
    for (left, right) in sweep_splits(spec) {
        let l = side_state(spec, &grid, &left, opts)?;
        let r = side_state(spec, &grid, &right, opts)?;
        let curve = sweep_separation(spec, &l, &r, &r_grid)?;
        let csv = format!("{}_sweep_{}.csv", sc.name, curve.label().replace(['{', '}'], "").replace(',', "-").replace('|', "_"));
        if let Some(dir) = out_dir {
            write_sweep_csv(&dir.join(&csv), &curve, spec.k)?;
        }
        let min = curve.min();
        outs.push(SweepOut {
            split: curve.label(),
            limit: curve.limit,
            side_energies: (l.energy, r.energy),
            min_r: min.map(|m| m.0),
            min_energy: min.map(|m| m.1),
            interior_minimum: curve.interior_minimum(),
            infeasible_points: curve.energy.iter().filter(|e| e.is_none()).count(),
            max_boundary_mass: curve.boundary_mass.iter().cloned().fold(0.0, f64::max),
            csv,
        });
        curves.push(curve);
    }
    Ok((outs, curves))
}

fn attainment_out(rep: &AttainmentReport) -> AttainmentOut {
    let label = |l: &[usize], r: &[usize]| format!("{}|{}", set_label(l), set_label(r));
    AttainmentOut {
        verdict: rep.verdict.name(),
        energy: rep.energy,
        splits: rep
            .splits
            .iter()
            .map(|s| SplitOut { split: s.label(), limit: s.limit, margin: s.margin, cross_term: s.cross_term, interacting: s.interacting })
            .collect(),
        diverging_split: rep.diverging_split.map(|i| rep.splits[i].label()),
        observed_split: label(&rep.observed_split.0, &rep.observed_split.1),
        separation: rep.separation,
        tol_split: rep.tol_split,
        note: rep.note,
    }
}

/// Per-scenario RNG: the run seed with the scenario position as stream, so parallel and
/// sequential runs draw identical numbers.
pub fn scenario_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run_scenario(sc: &Scenario, index: usize, seed: u64, ov: &Overrides, out_dir: Option<&Path>) -> (ScenarioReport, Timings) {
    let mut rep = ScenarioReport::empty(sc, seed);
    let mut clock = Clock::new(&sc.name);
    if let Err(e) = run_inner(sc, index, seed, ov, out_dir, &mut rep, &mut clock) {
        rep.error = Some(format!("{e:#}"));
    }
    (rep, clock.finish())
}

fn run_inner(
    sc: &Scenario,
    index: usize,
    seed: u64,
    ov: &Overrides,
    out_dir: Option<&Path>,
    rep: &mut ScenarioReport,
    clock: &mut Clock,
) -> Result<()> {
    let spec = sc.spec().context("build_system")?;
    rep.system = Some(system_out(&spec));
    let mut rng = scenario_rng(seed, index);
    let opts = minimize_options(sc, ov);
    let task = sc.task;
    let full = task == Task::FullReport;
    if matches!(task, Task::Classify | Task::Predict) || full {
        rep.classification = Some(clock.stage("classify", || classify(&spec)));
    }
    if task == Task::Scalar || full {
        let sols = clock.stage("scalar", || solitons(sc, &spec, 0.0)).context("scalar")?;
        rep.scalar = Some(scalar_section(&sols));
    }
    if task == Task::Decay {
        rep.decay = Some(clock.stage("decay", || decay_section(sc, &spec)).context("overlap")?);
    }
    if task == Task::Predict || full {
        let (p, _, _) = clock.stage("predict", || prediction_section(sc, &spec)).context("blocks")?;
        rep.prediction = Some(p);
    }
    let mut curves = Vec::new();
    if task == Task::Sweep || full {
        let (s, c) = clock.stage("sweep", || sweep_section(sc, &spec, &opts, out_dir)).context("solver (sweep)")?;
        rep.sweeps = Some(s);
        curves = c;
    }
    if task == Task::GroundState || full {
        let mut o = opts.clone();
        if !curves.is_empty() {
            o.split_limits = Some(curves.iter().map(|c| c.limit).collect());
        }
        let partition = sc.partition()?;
        let (g, best) = clock
            .stage("ground-state", || ground_state_section(sc, &spec, &partition, &o, &mut rng, out_dir))
            .context("solver (ground state)")?;
        rep.ground_state = Some(g);
        if full {
            if let Some(b) = best {
                let a = clock.stage("attainment", || check_attainment(&spec, &b, &curves, o.tol_split));
                rep.attainment = Some(attainment_out(&a));
            }
        }
    }
    Ok(())
}

/// Output directory helper: creates it when missing.
pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}
