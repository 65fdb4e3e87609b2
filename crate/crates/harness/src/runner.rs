use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use census_core::trial::{run_trial, TrialOutcome};
use rayon::prelude::*;

use crate::output::{self, RunManifest};
use crate::scenario::{Scenario, TrialSpec};
use crate::HarnessError;

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    pub outcome: TrialOutcome,
}

/// Runs every trial of `scenario` and returns them in trial-index order.
///
/// `threads = Some(1)` runs on the calling thread; otherwise a pool of the given
/// size (or one per core) runs trials concurrently. Trials share nothing, so the
/// records are identical either way.
pub fn execute(scenario: &Scenario, threads: Option<usize>) -> Result<Vec<TrialRecord>, HarnessError> {
    scenario.validate()?;
    let specs = scenario.trials()?;
    let run = |spec: TrialSpec| -> Result<TrialRecord, HarnessError> {
        let outcome = run_trial(&spec.config).map_err(|source| HarnessError::Trial {
            index: spec.index,
            source,
        })?;
        Ok(TrialRecord { spec, outcome })
    };
    if threads == Some(1) {
        return specs.into_iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    pool.install(|| specs.into_par_iter().map(run).collect())
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs a scenario and writes `trials.csv`, `timeline.csv`, `theory.csv` and
/// `manifest.toml` into `out`.
pub fn run_scenario(scenario: &Scenario, out: &Path, threads: Option<usize>) -> Result<RunManifest, HarnessError> {
    scenario.validate()?;
    let started = unix_now();
    let records = execute(scenario, threads)?;
    std::fs::create_dir_all(out).map_err(crate::io_err(out))?;
    let outputs = output::write_outputs(scenario, &records, out)?;
    let manifest = RunManifest::new(scenario, &records, outputs, started, unix_now());
    manifest.write(&out.join(output::MANIFEST_FILE))?;
    Ok(manifest)
}
