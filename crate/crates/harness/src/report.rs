//! Per-cell comparison tables built from a results directory.

use std::path::Path;

use census_core::metrics::{summarize, Summary};
use serde::Serialize;

use crate::output::{read_trials, RunManifest, TrialRow, MANIFEST_FILE, TRIALS_FILE};
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: usize,
    pub variant: String,
    pub n: usize,
    pub tokens: usize,
    pub density: f64,
    pub mobility: String,
    pub speed_min: f64,
    pub speed_max: f64,
    pub loss: f64,
    pub trials: usize,
    pub cover_mean: Option<f64>,
    pub cover_stderr: Option<f64>,
    pub cover_60_mean: Option<f64>,
    pub ratio_70_mean: Option<f64>,
    pub ratio_100_mean: Option<f64>,
    pub gradient_msgs_mean: f64,
    pub premature_terminations: u64,
    /// Trials whose deduplicated count equals their visited count.
    pub exact_counts: usize,
    /// Mean union coverage over consecutive ensembles of `union_size` trials.
    pub union_coverage_mean: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<Summary> {
    summarize(&values.collect::<Vec<_>>()).ok()
}

/// Union coverage of each consecutive run of `size` rows.
pub fn ensemble_unions(rows: &[&TrialRow], size: usize) -> Vec<f64> {
    rows.chunks_exact(size.max(1))
        .map(|chunk| {
            let n = chunk[0].n;
            let mut union = vec![false; n];
            for row in chunk {
                for (u, v) in union.iter_mut().zip(row.visited_set()) {
                    *u |= v;
                }
            }
            union.iter().filter(|&&v| v).count() as f64 / n.max(1) as f64
        })
        .collect()
}

pub fn summarize_rows(rows: &[TrialRow], union_size: Option<usize>) -> Vec<CellSummary> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let cell = rows[start].cell;
        let end = rows[start..].iter().position(|r| r.cell != cell).map_or(rows.len(), |p| start + p);
        let group: Vec<&TrialRow> = rows[start..end].iter().collect();
        let first = group[0];
        let cover = mean_of(group.iter().filter_map(|r| r.cover_slots).map(|v| v as f64));
        out.push(CellSummary {
            cell,
            variant: first.variant.clone(),
            n: first.n,
            tokens: first.tokens,
            density: first.density,
            mobility: first.mobility.clone(),
            speed_min: first.speed_min,
            speed_max: first.speed_max,
            loss: first.loss,
            trials: group.len(),
            cover_mean: cover.map(|s| s.mean),
            cover_stderr: cover.map(|s| s.stderr),
            cover_60_mean: mean_of(group.iter().filter_map(|r| r.cover_slots_60).map(|v| v as f64)).map(|s| s.mean),
            ratio_70_mean: mean_of(group.iter().filter_map(|r| r.ratio_70)).map(|s| s.mean),
            ratio_100_mean: mean_of(group.iter().filter_map(|r| r.ratio_100)).map(|s| s.mean),
            gradient_msgs_mean: mean_of(group.iter().map(|r| r.gradient_msgs as f64)).map_or(0.0, |s| s.mean),
            premature_terminations: group.iter().map(|r| r.premature_terminations).sum(),
            exact_counts: group
                .iter()
                .filter(|r| r.total_contributions == Some(r.visited as u64))
                .count(),
            union_coverage_mean: union_size
                .and_then(|size| mean_of(ensemble_unions(&group, size).into_iter()))
                .map(|s| s.mean),
        });
        start = end;
    }
    out
}

/// Reads `trials.csv` (and the manifest when present) from `dir` and renders
/// one CSV line per grid cell.
pub fn report(dir: &Path) -> Result<String, HarnessError> {
    let rows = read_trials(&dir.join(TRIALS_FILE))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let union_size = if manifest_path.exists() {
        let m = RunManifest::read(&manifest_path)?;
        m.scenario.partial_stop.and(m.scenario.union_size).map(|u| u as usize)
    } else {
        None
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summarize_rows(&rows, union_size) {
        w.serialize(s)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io {
        path: dir.to_path_buf(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
