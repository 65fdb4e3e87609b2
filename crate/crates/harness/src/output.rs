//! CSV schemas and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use census_core::metrics::exploration_ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::runner::TrialRecord;
use crate::scenario::{Scenario, ScenarioFile};
use crate::theory::{theory_rows, TheoryRow};
use crate::{io_err, HarnessError};

/// Bumped whenever a column is added, removed or reordered.
pub const COLUMN_VERSION: u32 = 1;
pub const TRIALS_FILE: &str = "trials.csv";
pub const TIMELINE_FILE: &str = "timeline.csv";
pub const THEORY_FILE: &str = "theory.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// One line of `trials.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub scenario: String,
    pub trial: usize,
    pub cell: usize,
    pub rep: u32,
    pub variant: String,
    pub n: usize,
    pub tokens: usize,
    pub density: f64,
    pub mobility: String,
    pub speed_min: f64,
    pub speed_max: f64,
    pub loss: f64,
    pub reliable: bool,
    pub aggregate: String,
    pub seed: u64,
    pub stop_reason: String,
    pub slots_run: u64,
    pub cover_slots: Option<u64>,
    pub cover_transactions: Option<u64>,
    pub cover_slots_60: Option<u64>,
    pub cover_slots_90: Option<u64>,
    pub ratio_70: Option<f64>,
    pub ratio_100: Option<f64>,
    pub token_transfers: u64,
    pub gradient_msgs: u64,
    pub announces: u64,
    pub requests: u64,
    pub acks: u64,
    pub retransmissions: u64,
    pub checkpoints: u64,
    pub visited: usize,
    pub termination_detect_slot: Option<u64>,
    pub premature_terminations: u64,
    pub premature_partitioned: u64,
    pub proximity_hits_70: u64,
    pub proximity_total_70: u64,
    pub total: Option<f64>,
    pub total_contributions: Option<u64>,
    pub exfil_messages: Option<u64>,
    /// Visited flags packed eight nodes per byte, lowest node in the lowest bit.
    pub visited_hex: String,
}

impl TrialRow {
    pub fn from_record(scenario: &str, r: &TrialRecord) -> Self {
        let cfg = &r.spec.config;
        let m = &r.outcome.metrics;
        let (hits, total) = m.proximity.below(0.7);
        Self {
            scenario: scenario.to_string(),
            trial: r.spec.index,
            cell: r.spec.cell,
            rep: r.spec.rep,
            variant: cfg.variant.to_string(),
            n: cfg.world.n_nodes,
            tokens: cfg.tokens,
            density: cfg.world.density,
            mobility: r.spec.mobility.to_string(),
            speed_min: r.spec.speed.min,
            speed_max: r.spec.speed.max,
            loss: cfg.world.loss_prob,
            reliable: cfg.protocol.reliable_transfer,
            aggregate: cfg.aggregate.kind.to_string(),
            seed: cfg.seed,
            stop_reason: r.outcome.stop_reason.name().to_string(),
            slots_run: m.slots_run,
            cover_slots: m.cover_slots,
            cover_transactions: m.cover_transactions,
            cover_slots_60: m.slot_at_coverage(0.6),
            cover_slots_90: m.slot_at_coverage(0.9),
            ratio_70: exploration_ratio(m, 0.7).ok(),
            ratio_100: exploration_ratio(m, 1.0).ok(),
            token_transfers: m.token_transfers,
            gradient_msgs: m.gradient_msgs,
            announces: m.announces,
            requests: m.requests,
            acks: m.acks,
            retransmissions: m.retransmissions,
            checkpoints: m.checkpoints,
            visited: m.visited_count(),
            termination_detect_slot: m.termination_detect_slot,
            premature_terminations: m.premature_terminations,
            premature_partitioned: m.premature_partitioned,
            proximity_hits_70: hits,
            proximity_total_70: total,
            total: r.outcome.total.as_ref().map(|a| a.scalar()),
            total_contributions: r.outcome.total.as_ref().and_then(|a| a.contributions()),
            exfil_messages: r.outcome.exfil.as_ref().map(|e| e.messages),
            visited_hex: pack_visited(&m.visited_set),
        }
    }

    pub fn visited_set(&self) -> Vec<bool> {
        unpack_visited(&self.visited_hex, self.n)
    }
}

pub fn pack_visited(set: &[bool]) -> String {
    let mut out = String::with_capacity(set.len().div_ceil(4));
    for chunk in set.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |b, (i, &v)| b | (u8::from(v) << i));
        let _ = write!(out, "{byte:02x}");
    }
    out
}

pub fn unpack_visited(hex: &str, n: usize) -> Vec<bool> {
    let bytes: Vec<u8> = hex
        .as_bytes()
        .chunks(2)
        .map(|pair| std::str::from_utf8(pair).ok().and_then(|s| u8::from_str_radix(s, 16).ok()).unwrap_or(0))
        .collect();
    (0..n).map(|i| bytes.get(i / 8).is_some_and(|b| b >> (i % 8) & 1 == 1)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimelineRow {
    pub trial: usize,
    pub series: &'static str,
    pub slot: u64,
    pub value: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<OutputFile, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    fs::write(path, &bytes).map_err(io_err(path))?;
    Ok(OutputFile {
        name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        rows: rows.len(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes the three CSV files, returning their descriptions for the manifest.
pub fn write_outputs(scenario: &Scenario, records: &[TrialRecord], dir: &Path) -> Result<Vec<OutputFile>, HarnessError> {
    let trials: Vec<TrialRow> = records.iter().map(|r| TrialRow::from_record(&scenario.name, r)).collect();
    let mut timeline = Vec::new();
    if scenario.timeline {
        for r in records {
            let m = &r.outcome.metrics;
            let trial = r.spec.index;
            timeline.extend(m.coverage_timeline.iter().map(|&(slot, v)| TimelineRow {
                trial,
                series: "coverage",
                slot,
                value: v as u64,
            }));
            timeline.extend(m.transfers_timeline.iter().map(|&(slot, value)| TimelineRow {
                trial,
                series: "transfers",
                slot,
                value,
            }));
        }
    }
    let theory: Vec<TheoryRow> = theory_rows(scenario)?;
    Ok(vec![
        write_csv(&dir.join(TRIALS_FILE), &trials)?,
        write_csv(&dir.join(TIMELINE_FILE), &timeline)?,
        write_csv(&dir.join(THEORY_FILE), &theory)?,
    ])
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Everything needed to reproduce a run's CSV files byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub column_version: u32,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub seeds: Vec<u64>,
    pub scenario: ScenarioFile,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(scenario: &Scenario, records: &[TrialRecord], outputs: Vec<OutputFile>, started: u64, finished: u64) -> Self {
        Self {
            column_version: COLUMN_VERSION,
            code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            started_unix: started,
            finished_unix: finished,
            seeds: records.iter().map(|r| r.spec.config.seed).collect(),
            scenario: ScenarioFile::snapshot(scenario),
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        fs::write(path, toml::to_string(self)?).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(toml::from_str(&text)?)
    }

    pub fn output(&self, name: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.name == name)
    }
}
