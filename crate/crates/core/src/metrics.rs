//! Per-trial counters and timelines, exploration overhead, union coverage and
//! cross-trial summaries.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("coverage fraction {0} was never reached")]
    CoverageNotReached(f64),
    #[error("coverage fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("no token has left its starting node by coverage {0}")]
    NoExploration(f64),
    #[error("trials cover networks of different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("nothing to summarize")]
    Empty,
}

/// Holder-neighborhood samples taken at each announce, bucketed by visited percent.
#[derive(Clone, Debug, PartialEq)]
pub struct ProximityProbe {
    /// Transactions observed with visited percent `floor(100·visited/N)`.
    pub transactions: Vec<u64>,
    /// Of those, transactions whose holder had an unvisited neighbor.
    pub with_unvisited_neighbor: Vec<u64>,
}

impl Default for ProximityProbe {
    fn default() -> Self {
        Self {
            transactions: vec![0; 101],
            with_unvisited_neighbor: vec![0; 101],
        }
    }
}

impl ProximityProbe {
    pub fn record(&mut self, visited: usize, n: usize, has_unvisited_neighbor: bool) {
        let pct = (100 * visited / n.max(1)).min(100);
        self.transactions[pct] += 1;
        if has_unvisited_neighbor {
            self.with_unvisited_neighbor[pct] += 1;
        }
    }

    /// (hits, total) over transactions taken while visited fraction was below `fraction`.
    pub fn below(&self, fraction: f64) -> (u64, u64) {
        let cut = ((fraction * 100.0).ceil() as usize).min(101);
        let hits = self.with_unvisited_neighbor[..cut].iter().sum();
        let total = self.transactions[..cut].iter().sum();
        (hits, total)
    }

    pub fn absorb(&mut self, other: &ProximityProbe) {
        for (a, b) in self.transactions.iter_mut().zip(&other.transactions) {
            *a += b;
        }
        for (a, b) in self.with_unvisited_neighbor.iter_mut().zip(&other.with_unvisited_neighbor) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialMetrics {
    pub n_nodes: usize,
    pub initial_tokens: usize,
    pub slots_run: u64,
    pub cover_slots: Option<u64>,
    pub cover_transactions: Option<u64>,
    pub token_transfers: u64,
    pub gradient_msgs: u64,
    pub announces: u64,
    pub requests: u64,
    pub acks: u64,
    pub retransmissions: u64,
    pub checkpoints: u64,
    /// (slot, visited) at every slot where the visited count changed.
    pub coverage_timeline: Vec<(u64, usize)>,
    /// (slot, cumulative transfers) at every slot where a transfer completed.
    pub transfers_timeline: Vec<(u64, u64)>,
    pub visited_set: Vec<bool>,
    pub termination_detect_slot: Option<u64>,
    /// Detections that fired while some node was still unvisited.
    pub premature_terminations: u64,
    /// Of those, detections made while unvisited nodes were cut off from every token,
    /// either now or within the last termination window plus one refresh interval.
    pub premature_partitioned: u64,
    pub proximity: ProximityProbe,
}

impl TrialMetrics {
    pub fn visited_count(&self) -> usize {
        self.visited_set.iter().filter(|&&v| v).count()
    }

    pub fn coverage(&self) -> f64 {
        self.visited_count() as f64 / self.n_nodes.max(1) as f64
    }

    fn target(&self, fraction: f64) -> Result<usize, MetricsError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(MetricsError::BadFraction(fraction));
        }
        Ok(((fraction * self.n_nodes as f64) - 1e-9).ceil() as usize)
    }

    /// First timeline entry at or above `fraction` coverage.
    fn reach(&self, fraction: f64) -> Result<(u64, usize), MetricsError> {
        let target = self.target(fraction)?;
        self.coverage_timeline
            .iter()
            .copied()
            .find(|&(_, v)| v >= target)
            .ok_or(MetricsError::CoverageNotReached(fraction))
    }

    /// First slot at which `fraction` of the nodes had been visited.
    pub fn slot_at_coverage(&self, fraction: f64) -> Option<u64> {
        self.reach(fraction).ok().map(|(s, _)| s)
    }

    pub fn transfers_at(&self, slot: u64) -> u64 {
        let idx = self.transfers_timeline.partition_point(|&(s, _)| s <= slot);
        if idx == 0 {
            0
        } else {
            self.transfers_timeline[idx - 1].1
        }
    }
}

/// Transfers per newly visited node at the moment coverage first reached `at_coverage`.
/// Nodes that started with a token were visited without a transfer and are not counted.
pub fn exploration_ratio(m: &TrialMetrics, at_coverage: f64) -> Result<f64, MetricsError> {
    let (slot, visited) = m.reach(at_coverage)?;
    let explored = visited.saturating_sub(m.initial_tokens);
    if explored == 0 {
        return Err(MetricsError::NoExploration(at_coverage));
    }
    Ok(m.transfers_at(slot) as f64 / explored as f64)
}

/// Fraction of nodes visited by at least one of `trials`.
pub fn union_coverage<'a, I>(trials: I) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = &'a TrialMetrics>,
{
    let mut iter = trials.into_iter();
    let first = iter.next().ok_or(MetricsError::Empty)?;
    let mut union = first.visited_set.clone();
    for t in iter {
        if t.visited_set.len() != union.len() {
            return Err(MetricsError::SizeMismatch(union.len(), t.visited_set.len()));
        }
        for (u, &v) in union.iter_mut().zip(&t.visited_set) {
            *u |= v;
        }
    }
    Ok(union.iter().filter(|&&v| v).count() as f64 / union.len().max(1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
    pub min: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

/// Linear-interpolated percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Result<Summary, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        n,
        mean,
        sd,
        stderr: sd / (n as f64).sqrt(),
        min: sorted[0],
        p10: percentile(&sorted, 0.1),
        median: percentile(&sorted, 0.5),
        p90: percentile(&sorted, 0.9),
        max: sorted[n - 1],
    })
}

/// Summary rows for every counter, skipping metrics no trial produced.
pub fn summarize_trials(trials: &[TrialMetrics]) -> Result<Vec<(&'static str, Summary)>, MetricsError> {
    if trials.is_empty() {
        return Err(MetricsError::Empty);
    }
    type Extract = fn(&TrialMetrics) -> Option<f64>;
    let columns: [(&'static str, Extract); 9] = [
        ("cover_slots", |t| t.cover_slots.map(|s| s as f64)),
        ("cover_transactions", |t| t.cover_transactions.map(|s| s as f64)),
        ("token_transfers", |t| Some(t.token_transfers as f64)),
        ("gradient_msgs", |t| Some(t.gradient_msgs as f64)),
        ("announces", |t| Some(t.announces as f64)),
        ("requests", |t| Some(t.requests as f64)),
        ("acks", |t| Some(t.acks as f64)),
        ("coverage", |t| Some(t.coverage())),
        ("exploration_ratio", |t| exploration_ratio(t, 1.0).ok()),
    ];
    let mut rows = Vec::new();
    for (name, f) in columns {
        let values: Vec<f64> = trials.iter().filter_map(f).collect();
        if let Ok(s) = summarize(&values) {
            rows.push((name, s));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(n: usize, visited: &[usize]) -> TrialMetrics {
        let mut set = vec![false; n];
        for &v in visited {
            set[v] = true;
        }
        TrialMetrics {
            n_nodes: n,
            visited_set: set,
            ..TrialMetrics::default()
        }
    }

    #[test]
    fn first_transfer_ratio_is_one() {
        let m = TrialMetrics {
            n_nodes: 10,
            initial_tokens: 1,
            coverage_timeline: vec![(0, 1), (4, 2)],
            transfers_timeline: vec![(4, 1)],
            ..TrialMetrics::default()
        };
        assert_eq!(exploration_ratio(&m, 0.2).unwrap(), 1.0);
        assert!(matches!(exploration_ratio(&m, 0.1), Err(MetricsError::NoExploration(_))));
        assert!(matches!(exploration_ratio(&m, 0.5), Err(MetricsError::CoverageNotReached(_))));
    }

    #[test]
    fn ratio_uses_transfers_at_reach_slot() {
        let m = TrialMetrics {
            n_nodes: 4,
            initial_tokens: 1,
            coverage_timeline: vec![(0, 1), (4, 2), (19, 3), (24, 4)],
            transfers_timeline: vec![(4, 1), (9, 2), (14, 3), (19, 4), (24, 5), (29, 6)],
            ..TrialMetrics::default()
        };
        assert_eq!(exploration_ratio(&m, 0.75).unwrap(), 2.0);
        assert_eq!(exploration_ratio(&m, 1.0).unwrap(), 5.0 / 3.0);
        assert_eq!(m.slot_at_coverage(0.7), Some(19));
    }

    #[test]
    fn union_of_trials() {
        let a = trial(10, &[0, 1, 2, 3, 4, 5]);
        assert_eq!(union_coverage([&a]).unwrap(), 0.6);
        let b = trial(10, &[0, 1, 2]);
        let c = trial(10, &[3, 4, 5]);
        assert_eq!(union_coverage([&b, &c]).unwrap(), 0.6);
        let d = trial(11, &[]);
        assert!(matches!(union_coverage([&a, &d]), Err(MetricsError::SizeMismatch(..))));
    }

    #[test]
    fn summary_basics() {
        let one = summarize(&[7.0]).unwrap();
        assert_eq!((one.mean, one.stderr), (7.0, 0.0));
        assert_eq!(summarize(&[10.0, 20.0]).unwrap().mean, 15.0);
        let xs: Vec<f64> = (0..30).map(|i| f64::from(i * i % 17)).collect();
        let s = summarize(&xs).unwrap();
        let mean = xs.iter().sum::<f64>() / 30.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 29.0;
        assert!((s.stderr - var.sqrt() / 30f64.sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn percentiles_interpolate() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.median, 3.0);
        assert!((s.p10 - 1.4).abs() < 1e-12);
        assert!((s.p90 - 4.6).abs() < 1e-12);
    }

    #[test]
    fn proximity_pools_by_fraction() {
        let mut p = ProximityProbe::default();
        p.record(10, 100, true);
        p.record(69, 100, false);
        p.record(70, 100, false);
        assert_eq!(p.below(0.7), (1, 2));
        let mut q = ProximityProbe::default();
        q.absorb(&p);
        assert_eq!(q.below(1.0), (1, 3));
    }
}
