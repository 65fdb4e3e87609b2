//! Aggregate payloads carried by tokens, checkpoint deduplication and the
//! final flooding exfiltration.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::protocol::{CheckpointRecord, Token, TokenId};
use crate::sim::{RngStream, SimError, SlottedChannel, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("cannot merge a {left} aggregate with a {right} aggregate")]
    KindMismatch { left: AggregateKind, right: AggregateKind },
    #[error("histogram bucket edges differ")]
    EdgeMismatch,
    #[error("histogram needs at least two strictly increasing edges")]
    BadEdges,
    #[error("unknown aggregate kind `{0}`")]
    UnknownKind(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggregateKind {
    Count,
    Sum,
    Min,
    Max,
    Histogram,
}

impl AggregateKind {
    /// Kinds whose result is unaffected by absorbing a node twice.
    pub fn duplicate_insensitive(self) -> bool {
        matches!(self, AggregateKind::Min | AggregateKind::Max | AggregateKind::Histogram)
    }
}

impl fmt::Display for AggregateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateKind::Count => "count",
            AggregateKind::Sum => "sum",
            AggregateKind::Min => "min",
            AggregateKind::Max => "max",
            AggregateKind::Histogram => "histogram",
        })
    }
}

impl FromStr for AggregateKind {
    type Err = AggregateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(AggregateKind::Count),
            "sum" => Ok(AggregateKind::Sum),
            "min" => Ok(AggregateKind::Min),
            "max" => Ok(AggregateKind::Max),
            "histogram" => Ok(AggregateKind::Histogram),
            other => Err(AggregateError::UnknownKind(other.to_string())),
        }
    }
}

/// A token's running aggregate. `Sum` carries its own count so the mean is exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Aggregate {
    Count { n: u64 },
    Sum { total: f64, n: u64 },
    Min { v: f64 },
    Max { v: f64 },
    Histogram { edges: Vec<f64>, counts: Vec<u64> },
}

impl Aggregate {
    pub fn count() -> Self {
        Aggregate::Count { n: 0 }
    }

    pub fn histogram(edges: Vec<f64>) -> Result<Self, AggregateError> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(AggregateError::BadEdges);
        }
        let counts = vec![0; edges.len() - 1];
        Ok(Aggregate::Histogram { edges, counts })
    }

    /// Identity element of `kind`. Histograms need their edges, see [`Aggregate::histogram`].
    pub fn identity(kind: AggregateKind) -> Result<Self, AggregateError> {
        match kind {
            AggregateKind::Count => Ok(Aggregate::Count { n: 0 }),
            AggregateKind::Sum => Ok(Aggregate::Sum { total: 0.0, n: 0 }),
            AggregateKind::Min => Ok(Aggregate::Min { v: f64::INFINITY }),
            AggregateKind::Max => Ok(Aggregate::Max { v: f64::NEG_INFINITY }),
            AggregateKind::Histogram => Err(AggregateError::BadEdges),
        }
    }

    /// Identity element of the same kind (and histogram edges) as `self`.
    pub fn empty_like(&self) -> Self {
        match self {
            Aggregate::Count { .. } => Aggregate::Count { n: 0 },
            Aggregate::Sum { .. } => Aggregate::Sum { total: 0.0, n: 0 },
            Aggregate::Min { .. } => Aggregate::Min { v: f64::INFINITY },
            Aggregate::Max { .. } => Aggregate::Max { v: f64::NEG_INFINITY },
            Aggregate::Histogram { edges, counts } => Aggregate::Histogram {
                edges: edges.clone(),
                counts: vec![0; counts.len()],
            },
        }
    }

    pub fn kind(&self) -> AggregateKind {
        match self {
            Aggregate::Count { .. } => AggregateKind::Count,
            Aggregate::Sum { .. } => AggregateKind::Sum,
            Aggregate::Min { .. } => AggregateKind::Min,
            Aggregate::Max { .. } => AggregateKind::Max,
            Aggregate::Histogram { .. } => AggregateKind::Histogram,
        }
    }

    /// Adds one node's datum.
    pub fn absorb(&mut self, datum: f64) {
        match self {
            Aggregate::Count { n } => *n += 1,
            Aggregate::Sum { total, n } => {
                *total += datum;
                *n += 1;
            }
            Aggregate::Min { v } => *v = v.min(datum),
            Aggregate::Max { v } => *v = v.max(datum),
            Aggregate::Histogram { edges, counts } => {
                // Out-of-range values land in the end buckets.
                let idx = edges[1..edges.len() - 1].partition_point(|&e| e <= datum);
                counts[idx] += 1;
            }
        }
    }

    pub fn merge(&self, other: &Aggregate) -> Result<Aggregate, AggregateError> {
        let merged = match (self, other) {
            (Aggregate::Count { n: a }, Aggregate::Count { n: b }) => Aggregate::Count { n: a + b },
            (Aggregate::Sum { total: a, n: na }, Aggregate::Sum { total: b, n: nb }) => Aggregate::Sum {
                total: a + b,
                n: na + nb,
            },
            (Aggregate::Min { v: a }, Aggregate::Min { v: b }) => Aggregate::Min { v: a.min(*b) },
            (Aggregate::Max { v: a }, Aggregate::Max { v: b }) => Aggregate::Max { v: a.max(*b) },
            (
                Aggregate::Histogram { edges: ea, counts: ca },
                Aggregate::Histogram { edges: eb, counts: cb },
            ) => {
                if ea != eb {
                    return Err(AggregateError::EdgeMismatch);
                }
                Aggregate::Histogram {
                    edges: ea.clone(),
                    counts: ca.iter().zip(cb).map(|(a, b)| a + b).collect(),
                }
            }
            (a, b) => {
                return Err(AggregateError::KindMismatch {
                    left: a.kind(),
                    right: b.kind(),
                })
            }
        };
        Ok(merged)
    }

    /// Number of node contributions, where the kind records it.
    pub fn contributions(&self) -> Option<u64> {
        match self {
            Aggregate::Count { n } | Aggregate::Sum { n, .. } => Some(*n),
            Aggregate::Histogram { counts, .. } => Some(counts.iter().sum()),
            _ => None,
        }
    }

    /// Mean of the absorbed values, for `Sum`.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Aggregate::Sum { total, n } if *n > 0 => Some(total / *n as f64),
            _ => None,
        }
    }

    /// Scalar summary used in reports: count, sum, min, max, or histogram mass.
    pub fn scalar(&self) -> f64 {
        match self {
            Aggregate::Count { n } => *n as f64,
            Aggregate::Sum { total, .. } => *total,
            Aggregate::Min { v } | Aggregate::Max { v } => *v,
            Aggregate::Histogram { counts, .. } => counts.iter().sum::<u64>() as f64,
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregate::Count { n } => write!(f, "count={n}"),
            Aggregate::Sum { total, n } => write!(f, "sum={total} n={n}"),
            Aggregate::Min { v } => write!(f, "min={v}"),
            Aggregate::Max { v } => write!(f, "max={v}"),
            Aggregate::Histogram { counts, .. } => {
                let parts: Vec<String> = counts.iter().map(u64::to_string).collect();
                write!(f, "histogram=[{}]", parts.join(" "))
            }
        }
    }
}

/// Kind plus histogram edges: everything needed to build an identity aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSpec {
    pub kind: AggregateKind,
    pub edges: Vec<f64>,
}

impl AggregateSpec {
    pub fn new(kind: AggregateKind) -> Self {
        let edges = if kind == AggregateKind::Histogram {
            (0..=10).map(|i| f64::from(i) * 10.0).collect()
        } else {
            Vec::new()
        };
        Self { kind, edges }
    }

    pub fn identity(&self) -> Result<Aggregate, AggregateError> {
        match self.kind {
            AggregateKind::Histogram => Aggregate::histogram(self.edges.clone()),
            kind => Aggregate::identity(kind),
        }
    }
}

impl Default for AggregateSpec {
    fn default() -> Self {
        Self::new(AggregateKind::Count)
    }
}

/// Latest known copy of one token id's data.
struct Version<'a> {
    version: u64,
    aggregate: &'a Aggregate,
}

fn offer<'a>(best: &mut BTreeMap<TokenId, Version<'a>>, id: TokenId, version: u64, aggregate: &'a Aggregate) {
    match best.get(&id) {
        Some(v) if v.version >= version => {}
        _ => {
            best.insert(id, Version { version, aggregate });
        }
    }
}

/// Combines live tokens and their checkpoint records, counting every token id once.
///
/// Every copy of a token id lies on one chain: a checkpoint freezes the sender's
/// copy while the recipient's copy (if the transfer actually landed) keeps
/// growing. Each id therefore contributes the copy with the highest transfer
/// count, which contains all the others.
pub fn dedup_and_total(tokens: &[Token]) -> Result<Option<Aggregate>, AggregateError> {
    let mut best: BTreeMap<TokenId, Version<'_>> = BTreeMap::new();
    for t in tokens {
        offer(&mut best, t.id, t.transfer_count, &t.aggregate);
        for c in &t.checkpoints {
            offer(&mut best, c.old_token_id, c.version, &c.frozen_aggregate);
        }
    }
    let mut total: Option<Aggregate> = None;
    for v in best.values() {
        total = Some(match total {
            None => v.aggregate.clone(),
            Some(acc) => acc.merge(v.aggregate)?,
        });
    }
    Ok(total)
}

/// Distinct checkpoint records across `tokens`, one per old token id (latest version).
pub fn distinct_checkpoints(tokens: &[Token]) -> Vec<CheckpointRecord> {
    let mut best: BTreeMap<TokenId, &CheckpointRecord> = BTreeMap::new();
    for c in tokens.iter().flat_map(|t| &t.checkpoints) {
        match best.get(&c.old_token_id) {
            Some(prev) if prev.version >= c.version => {}
            _ => {
                best.insert(c.old_token_id, c);
            }
        }
    }
    best.into_values().cloned().collect()
}

/// Outcome of flooding the final tokens through the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ExfilReport {
    pub token_aggregates: Vec<(TokenId, Aggregate)>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub total: Option<Aggregate>,
    pub messages: u64,
    /// Last slot (counted from the start of the flood) in which anything was sent.
    pub completion_slot: u64,
    /// Nodes that ended up with every token.
    pub fully_informed: usize,
}

/// Floods every token from its holder over a frozen snapshot of the world.
/// Each node rebroadcasts each distinct token id the first time it hears it.
pub fn flood_exfiltrate(
    world: &World,
    loss_prob: f64,
    rng: RngStream,
    holdings: &[(usize, Token)],
) -> Result<ExfilReport, FloodError> {
    let n = world.len();
    let mut channel: SlottedChannel<TokenId> = SlottedChannel::new(loss_prob, rng)?;
    let mut known: Vec<HashSet<TokenId>> = vec![HashSet::new(); n];
    let mut ids: Vec<TokenId> = Vec::new();
    for (holder, token) in holdings {
        if *holder >= n {
            return Err(FloodError::UnknownHolder(*holder));
        }
        if known[*holder].insert(token.id) {
            channel.broadcast(*holder, token.id);
        }
        ids.push(token.id);
    }
    ids.sort();
    ids.dedup();

    let mut slot = 0u64;
    let mut completion_slot = 0u64;
    while channel.pending() > 0 {
        completion_slot = slot;
        let deliveries = channel.end_slot(slot, world.positions(), world.grid());
        for d in deliveries {
            for r in d.receivers {
                if known[r].insert(d.msg) {
                    channel.broadcast(r, d.msg);
                }
            }
        }
        slot += 1;
    }

    let tokens: Vec<Token> = holdings.iter().map(|(_, t)| t.clone()).collect();
    let fully_informed = known.iter().filter(|k| k.len() == ids.len()).count();
    Ok(ExfilReport {
        token_aggregates: tokens.iter().map(|t| (t.id, t.aggregate.clone())).collect(),
        checkpoints: distinct_checkpoints(&tokens),
        total: dedup_and_total(&tokens)?,
        messages: channel.sent(),
        completion_slot,
        fully_informed,
    })
}

#[derive(Debug, Error)]
pub enum FloodError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("holder {0} is not a node of this world")]
    UnknownHolder(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::checkpoint_token;
    use crate::sim::{MobilityModel, StreamId, WorldConfig};
    use proptest::prelude::*;

    fn token(id: u64, agg: Aggregate) -> Token {
        Token::new(TokenId(id), agg, 0)
    }

    #[test]
    fn count_merge() {
        let m = Aggregate::Count { n: 3 }.merge(&Aggregate::Count { n: 4 }).unwrap();
        assert_eq!(m, Aggregate::Count { n: 7 });
    }

    #[test]
    fn min_identity() {
        let id = Aggregate::identity(AggregateKind::Min).unwrap();
        assert_eq!(Aggregate::Min { v: 5.0 }.merge(&id).unwrap(), Aggregate::Min { v: 5.0 });
    }

    #[test]
    fn histogram_merge() {
        let a = Aggregate::Histogram {
            edges: vec![0.0, 1.0, 2.0],
            counts: vec![2, 0],
        };
        let b = Aggregate::Histogram {
            edges: vec![0.0, 1.0, 2.0],
            counts: vec![1, 3],
        };
        match a.merge(&b).unwrap() {
            Aggregate::Histogram { counts, .. } => assert_eq!(counts, vec![3, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_kinds_fail() {
        let err = Aggregate::Count { n: 1 }.merge(&Aggregate::Min { v: 1.0 }).unwrap_err();
        assert!(matches!(err, AggregateError::KindMismatch { .. }));
        let a = Aggregate::histogram(vec![0.0, 1.0]).unwrap();
        let b = Aggregate::histogram(vec![0.0, 2.0]).unwrap();
        assert_eq!(a.merge(&b).unwrap_err(), AggregateError::EdgeMismatch);
    }

    #[test]
    fn histogram_buckets() {
        let mut h = Aggregate::histogram(vec![0.0, 10.0, 20.0, 30.0]).unwrap();
        for x in [-5.0, 0.0, 9.9, 10.0, 25.0, 30.0, 99.0] {
            h.absorb(x);
        }
        match h {
            Aggregate::Histogram { counts, .. } => assert_eq!(counts, vec![3, 1, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sum_carries_mean() {
        let mut s = Aggregate::identity(AggregateKind::Sum).unwrap();
        for x in [1.0, 2.0, 6.0] {
            s.absorb(x);
        }
        assert_eq!(s.mean(), Some(3.0));
    }

    #[test]
    fn shared_checkpoint_counted_once() {
        let cp = CheckpointRecord {
            old_token_id: TokenId(7),
            frozen_aggregate: Aggregate::Count { n: 12 },
            version: 4,
        };
        let mut a = token(8, Aggregate::Count { n: 5 });
        a.checkpoints.push(cp.clone());
        let mut b = token(9, Aggregate::Count { n: 6 });
        b.checkpoints.push(cp);
        assert_eq!(dedup_and_total(&[a, b]).unwrap(), Some(Aggregate::Count { n: 23 }));
    }

    #[test]
    fn plain_merge_without_checkpoints() {
        let a = token(1, Aggregate::Count { n: 5 });
        let b = token(2, Aggregate::Count { n: 6 });
        assert_eq!(dedup_and_total(&[a, b]).unwrap(), Some(Aggregate::Count { n: 11 }));
        assert_eq!(dedup_and_total(&[]).unwrap(), None);
    }

    #[test]
    fn live_copy_supersedes_sender_checkpoint() {
        // Sender froze token 7 at 12; the recipient kept it and absorbed 3 more.
        let mut live = token(7, Aggregate::Count { n: 15 });
        live.transfer_count = 5;
        let mut frozen = token(7, Aggregate::Count { n: 12 });
        frozen.transfer_count = 4;
        let fresh = checkpoint_token(&frozen, TokenId(8));
        assert_eq!(dedup_and_total(&[live, fresh]).unwrap(), Some(Aggregate::Count { n: 15 }));
    }

    fn agg_triple() -> impl Strategy<Value = (AggregateKind, Vec<Vec<i32>>)> {
        (
            prop_oneof![
                Just(AggregateKind::Count),
                Just(AggregateKind::Sum),
                Just(AggregateKind::Min),
                Just(AggregateKind::Max),
                Just(AggregateKind::Histogram)
            ],
            prop::collection::vec(prop::collection::vec(-50i32..150, 0..6), 3),
        )
    }

    proptest! {
        #[test]
        fn merge_is_a_commutative_monoid((kind, data) in agg_triple()) {
            let spec = AggregateSpec::new(kind);
            let build = |xs: &Vec<i32>| {
                let mut a = spec.identity().unwrap();
                for &x in xs { a.absorb(f64::from(x)); }
                a
            };
            let (a, b, c) = (build(&data[0]), build(&data[1]), build(&data[2]));
            let id = spec.identity().unwrap();
            prop_assert_eq!(a.merge(&id).unwrap(), a.clone());
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(
                a.merge(&b).unwrap().merge(&c).unwrap(),
                a.merge(&b.merge(&c).unwrap()).unwrap()
            );
        }
    }

    fn static_world(n: usize) -> World {
        // Nodes never move.
        let cfg = WorldConfig::derive(n, 10.0, 1.0, 0.0, 0.05).unwrap();
        let model = MobilityModel::RandomWalk2D { leg_len: 1.0, v_min: 0.0, v_max: 0.0 };
        World::new(cfg, model, 3).unwrap()
    }

    fn connected(world: &World) -> bool {
        let n = world.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in world.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn single_token_flood_costs_n_messages() {
        let mut seed = 0;
        let world = loop {
            let cfg = WorldConfig::derive(120, 14.0, 1.0, 0.0, 0.05).unwrap();
            let model = MobilityModel::RandomWalk2D { leg_len: 1.0, v_min: 0.0, v_max: 0.0 };
            let w = World::new(cfg, model, seed).unwrap();
            if connected(&w) {
                break w;
            }
            seed += 1;
        };
        let t = token(1, Aggregate::Count { n: 120 });
        let report = flood_exfiltrate(&world, 0.0, RngStream::new(1, StreamId::Channel), &[(0, t)]).unwrap();
        assert_eq!(report.messages, 120);
        assert_eq!(report.fully_informed, 120);
        assert_eq!(report.total, Some(Aggregate::Count { n: 120 }));
    }

    #[test]
    fn k_token_flood_bounded_by_nk() {
        let world = static_world(60);
        let holdings: Vec<(usize, Token)> =
            (0..4).map(|i| (i * 7, token(i as u64, Aggregate::Count { n: 1 }))).collect();
        let report = flood_exfiltrate(&world, 0.0, RngStream::new(2, StreamId::Channel), &holdings).unwrap();
        assert!(report.messages <= 60 * 4);
        assert_eq!(report.total, Some(Aggregate::Count { n: 4 }));
    }

    #[test]
    fn single_node_flood() {
        let world = static_world(1);
        let t = token(1, Aggregate::Count { n: 1 });
        let report = flood_exfiltrate(&world, 0.0, RngStream::new(1, StreamId::Channel), &[(0, t)]).unwrap();
        assert_eq!(report.messages, 1);
        assert_eq!(report.completion_slot, 0);
    }
}
