//! Scenario runner for the coupled NLS toolkit: configs in, JSON report and CSV sidecars out.

#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod output;
pub mod pipeline;
pub mod scenarios;

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, DEFAULT_SEED};
use crate::pipeline::{run_scenario, Overrides, ScenarioReport, Timings};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    /// The config as run, seed filled in; feeding it back reproduces the report.
    pub config: Config,
    pub scenarios: Vec<ScenarioReport>,
}

impl Report {
    /// 1 on any scenario error, 2 when some prediction is indeterminate, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.scenarios.iter().any(|s| s.error.is_some()) {
            1
        } else if self.scenarios.iter().any(|s| s.indeterminate()) {
            2
        } else {
            0
        }
    }
}

/// Runs every scenario (up to `jobs` at once) and returns the report with per-scenario timings.
/// `seed` overrides the config's seed.
pub fn run_config(mut cfg: Config, seed: Option<u64>, ov: &Overrides, jobs: usize, out_dir: Option<&Path>) -> Result<(Report, Vec<Timings>)> {
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    cfg.seed = Some(seed);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().context("thread pool")?;
    let results: Vec<(ScenarioReport, Timings)> = pool.install(|| {
        cfg.scenarios.par_iter().enumerate().map(|(i, sc)| run_scenario(sc, i, seed, ov, out_dir)).collect()
    });
    let (scenarios, timings) = results.into_iter().unzip();
    Ok((
        Report { schema_version: SCHEMA_VERSION, tool: "cnls", version: env!("CARGO_PKG_VERSION"), seed, config: cfg, scenarios },
        timings,
    ))
}

/// Runs and writes `report.json` and `timings.json` (plus sidecars) into `out_dir`.
pub fn run_to_dir(cfg: Config, seed: Option<u64>, ov: &Overrides, jobs: usize, out_dir: &Path) -> Result<Report> {
    let dir = pipeline::ensure_dir(out_dir)?;
    let (report, timings) = run_config(cfg, seed, ov, jobs, Some(&dir))?;
    output::write_json(&dir.join("report.json"), &report)?;
    output::write_json(&dir.join("timings.json"), &timings)?;
    Ok(report)
}
