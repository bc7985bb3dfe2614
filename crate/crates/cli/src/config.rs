//! Scenario configuration (TOML, or the `config` object echoed inside a JSON report).
//!
//! Component indices are 1-based everywhere in the file format.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cnls_core::blocks::DeltaScaling;
use cnls_core::model::{build_system, ConstraintPartition, Grid, SystemParams, SystemSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Classify,
    Scalar,
    Decay,
    GroundState,
    Sweep,
    Predict,
    FullReport,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::Scalar => "scalar",
            Task::Decay => "decay",
            Task::GroundState => "ground-state",
            Task::Sweep => "sweep",
            Task::Predict => "predict",
            Task::FullReport => "full-report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub lambda: Vec<f64>,
    /// Defaults to all ones.
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    /// `[i, j, value]` for every pair i < j. May be omitted when `delta` is given.
    #[serde(default)]
    pub beta: Vec<(usize, usize, f64)>,
    /// Zero every coupling after validation (diagnostic runs).
    #[serde(default)]
    pub decoupled: bool,
}

fn default_n() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_extent")]
    pub extent: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_extent() -> f64 {
    20.0
}

fn default_spacing() -> f64 {
    0.01
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { extent: default_extent(), spacing: default_spacing() }
    }
}

/// β_ij = sign_ij · δ^{t_ij} · |β̂_ij|, with the sign taken from β̂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaConfig {
    pub delta: f64,
    /// `[i, j, t]` for every pair.
    pub t: Vec<(usize, usize, f64)>,
    /// `[i, j, signed β̂]` for every pair.
    pub beta_hat: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RGridConfig {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(default)]
    pub geometric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TaskOptions {
    /// Constraint groups (1-based); default: one group per component.
    #[serde(default)]
    pub partition: Option<Vec<Vec<usize>>>,
    /// Explicit starting centers, one list of k values per start.
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
    /// Separations for sweeps; default 0..=12 decay lengths in 49 steps.
    #[serde(default)]
    pub r_grid: Option<RGridConfig>,
    /// Pairs for decay fits (1-based); default every pair.
    #[serde(default)]
    pub pairs: Option<Vec<(usize, usize)>>,
    /// Fit window for decay laws; default [6, 14].
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub beta_large: Option<f64>,
    #[serde(default)]
    pub beta_small: Option<f64>,
    #[serde(default)]
    pub near_equal: Option<f64>,
    #[serde(default)]
    pub tol_split: Option<f64>,
    #[serde(default)]
    pub tol_g: Option<f64>,
    #[serde(default)]
    pub tol_e: Option<f64>,
    #[serde(default)]
    pub zero_tol_factor: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Standard deviation of seeded Gaussian jitter added to starting centers.
    #[serde(default)]
    pub center_jitter: Option<f64>,
    /// Write the ground-state fields as a binary grid file.
    #[serde(default)]
    pub dump_fields: bool,
    /// Radial step for N = 2, 3 (translate ansatz and radial quotients).
    #[serde(default)]
    pub radial_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub task: Task,
    pub system: SystemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub delta: Option<DeltaConfig>,
    #[serde(default)]
    pub options: TaskOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| anyhow!("config parse error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML config, or a JSON report whose `config` object is reused.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let inner = v.get("config").cloned().unwrap_or(v);
            let cfg: Config = serde_json::from_value(inner).with_context(|| format!("config object in {}", path.display()))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            if !names.insert(s.name.as_str()) {
                bail!("scenario name '{}' is used twice", s.name);
            }
            s.spec().with_context(|| format!("scenario '{}'", s.name))?;
            s.check_options().with_context(|| format!("scenario '{}'", s.name))?;
        }
        Ok(())
    }
}

fn pair_table(k: usize, entries: &[(usize, usize, f64)], what: &str) -> Result<Vec<f64>> {
    let mut m = vec![f64::NAN; k * k];
    for &(i, j, v) in entries {
        if i == 0 || j == 0 || i > k || j > k || i == j {
            bail!("{what}: pair [{i}, {j}] is not a valid 1-based off-diagonal pair for k = {k}");
        }
        let (a, b) = (i - 1, j - 1);
        if !m[a * k + b].is_nan() {
            bail!("{what}: pair [{i}, {j}] given twice");
        }
        m[a * k + b] = v;
        m[b * k + a] = v;
    }
    for a in 0..k {
        for b in a + 1..k {
            if m[a * k + b].is_nan() {
                bail!("{what}: missing pair [{}, {}]", a + 1, b + 1);
            }
        }
    }
    Ok(m)
}

impl Scenario {
    pub fn k(&self) -> usize {
        self.system.lambda.len()
    }

    fn coupling_table(&self) -> Result<Vec<f64>> {
        let k = self.k();
        match &self.delta {
            Some(d) => {
                if !self.system.beta.is_empty() {
                    bail!("give either system.beta or delta, not both");
                }
                let t = pair_table(k, &d.t, "delta.t")?;
                let bh = pair_table(k, &d.beta_hat, "delta.beta_hat")?;
                Ok(t.iter().zip(&bh).map(|(t, b)| if b.is_nan() { 0.0 } else { b.signum() * d.delta.powf(*t) * b.abs() }).collect())
            }
            None => pair_table(k, &self.system.beta, "system.beta"),
        }
    }

    pub fn spec(&self) -> Result<SystemSpec> {
        let k = self.k();
        let table = self.coupling_table()?;
        let beta = (0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { table[i * k + j] }).collect()).collect();
        let spec = build_system(&SystemParams {
            n: self.system.n,
            k,
            lambda: self.system.lambda.clone(),
            mu: self.system.mu.clone().unwrap_or_else(|| vec![1.0; k]),
            beta,
        })?;
        Ok(if self.system.decoupled { spec.decoupled() } else { spec })
    }

    pub fn delta_scaling(&self) -> Result<Option<DeltaScaling>> {
        let Some(d) = &self.delta else { return Ok(None) };
        let k = self.k();
        let mut t = pair_table(k, &d.t, "delta.t")?;
        let mut bh = pair_table(k, &d.beta_hat, "delta.beta_hat")?;
        for j in 0..k {
            t[j * k + j] = 0.0;
            bh[j * k + j] = 0.0;
        }
        Ok(Some(DeltaScaling { delta: d.delta, t, beta_hat: bh.iter().map(|v| v.abs()).collect() }))
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.system.n, self.grid.extent, self.grid.spacing)?)
    }

    pub fn partition(&self) -> Result<ConstraintPartition> {
        let k = self.k();
        match &self.options.partition {
            None => Ok(ConstraintPartition::singletons(k)),
            Some(groups) => {
                let mut g0 = Vec::with_capacity(groups.len());
                for g in groups {
                    if g.contains(&0) {
                        bail!("partition indices are 1-based");
                    }
                    g0.push(g.iter().map(|i| i - 1).collect());
                }
                Ok(ConstraintPartition::new(k, g0)?)
            }
        }
    }

    pub fn pairs(&self) -> Result<Vec<(usize, usize)>> {
        let k = self.k();
        match &self.options.pairs {
            None => Ok((0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()),
            Some(list) => list
                .iter()
                .map(|&(i, j)| {
                    if i == 0 || j == 0 || i > k || j > k || i == j {
                        bail!("pair [{i}, {j}] is not a valid 1-based pair for k = {k}");
                    }
                    Ok((i - 1, j - 1))
                })
                .collect(),
        }
    }

    fn check_options(&self) -> Result<()> {
        let k = self.k();
        self.partition()?;
        self.pairs()?;
        if let Some(c) = &self.options.centers {
            if c.iter().any(|v| v.len() != k) {
                bail!("every entry of options.centers needs {k} values");
            }
        }
        if let Some(r) = &self.options.r_grid {
            if !(r.lo >= 0.0 && r.hi > r.lo && r.count >= 2) {
                bail!("options.r_grid needs 0 <= lo < hi and count >= 2");
            }
        }
        if let Some((a, b)) = self.options.window {
            if !(b > a) {
                bail!("options.window must be increasing");
            }
        }
        if matches!(self.task, Task::GroundState | Task::Sweep | Task::FullReport) && self.system.n == 1 {
            self.grid()?;
        }
        Ok(())
    }
}
