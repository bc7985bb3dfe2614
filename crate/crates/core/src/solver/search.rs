//! Multi-start ground-state search over decomposition-suggested initial placements.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::blocks::{optimal_decompositions, SignGraph};
use crate::error::{Error, Result};
use crate::model::{ConstraintPartition, Grid, SystemSpec};
use crate::solver::init::{block_centers, default_block_gap, soliton_field};
use crate::solver::minimize::{minimize, Diagnosis, GroundStateResult, MinimizeOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRun {
    /// Decomposition label of the start, or "co-located".
    pub start: String,
    pub centers: Vec<f64>,
    pub energy: Option<f64>,
    pub diagnosis: Option<Diagnosis>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: GroundStateResult,
    pub best_run: usize,
    pub runs: Vec<SearchRun>,
}

/// Start points: every component at the origin, then one placement per optimal decomposition
/// (blocks co-located, consecutive blocks `default_block_gap` apart).
pub fn initial_placements(spec: &SystemSpec) -> Vec<(String, Vec<f64>)> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    out.push((String::from("co-located"), alloc::vec![0.0; spec.k]));
    let opt = optimal_decompositions(&SignGraph::from_spec(spec));
    let gap = default_block_gap(spec);
    for dec in &opt.decompositions {
        let c = block_centers(spec.k, dec, gap);
        if !out.iter().any(|(_, o)| *o == c) {
            out.push((dec.label(), c));
        }
    }
    out
}

/// Minimize from every placement of `initial_placements` (or the given centers) and keep the
/// lowest energy. Runs that fail are recorded; the search fails only if all of them do.
pub fn ground_state_search(
    spec: &SystemSpec,
    grid: &Grid,
    partition: &ConstraintPartition,
    centers: Option<&[Vec<f64>]>,
    opts: &MinimizeOptions,
) -> Result<SearchOutcome> {
    let starts: Vec<(String, Vec<f64>)> = match centers {
        Some(list) => list.iter().enumerate().map(|(i, c)| (format!("given #{}", i + 1), c.clone())).collect(),
        None => initial_placements(spec),
    };
    let mut runs = Vec::with_capacity(starts.len());
    let mut best: Option<(usize, GroundStateResult)> = None;
    let mut last_err = None;
    for (i, (label, c)) in starts.into_iter().enumerate() {
        let res = soliton_field(spec, grid, &c).and_then(|init| minimize(spec, partition, &init, opts));
        match res {
            Ok(r) => {
                runs.push(SearchRun { start: label, centers: c, energy: Some(r.energy), diagnosis: Some(r.diagnosis), error: None });
                if best.as_ref().is_none_or(|(_, b)| r.energy < b.energy) {
                    best = Some((i, r));
                }
            }
            Err(e) => {
                runs.push(SearchRun { start: label, centers: c, energy: None, diagnosis: None, error: Some(format!("{e}")) });
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((best_run, best)) => Ok(SearchOutcome { best, best_run, runs }),
        None => Err(last_err.unwrap_or(Error::InvalidSpec("no starting placements".into()))),
    }
}
