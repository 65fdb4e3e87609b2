//! Slot-by-slot execution of one trial: every node runs the protocol over the
//! shared lossy channel while the world moves underneath.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::aggregation::{dedup_and_total, flood_exfiltrate, Aggregate, AggregateError, AggregateSpec, ExfilReport, FloodError};
use crate::metrics::TrialMetrics;
use crate::protocol::{
    checkpoint_token, gradient_initiate, gradient_receive, on_announce, reported_level, request_level, select_recipient,
    suppress_on_overhear, termination_check, tick_refresh, Gradient, GradientInstance, GradientView, InstanceMemory,
    Level, LevelTrace, Message, NodeState, PendingTransfer, ProtocolConfig, ProtocolError, Received, Request, TerminationWatch,
    Token, TokenId, TokenIdAllocator, TransferAction, TransferLog, Variant,
};
use crate::sim::{MobilityModel, RngStream, SimError, SlottedChannel, StreamId, World, WorldConfig};

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Flood(#[from] FloodError),
    #[error("invalid trial setting {name}: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("slot {slot}, node {node}: {reason}")]
    Audit { slot: u64, node: usize, reason: String },
}

/// When a trial stops.
#[derive(Clone, Debug, PartialEq)]
pub struct StopRule {
    /// Stop once this fraction of nodes has been visited.
    pub coverage: f64,
    pub max_slots: u64,
    /// Stop once transfers per visited node reach this value.
    pub transfer_ratio_cutoff: Option<f64>,
    /// For gradient bias at full coverage: keep running until a holder detects
    /// termination, or until the grace period after coverage runs out.
    pub await_termination: bool,
    pub termination_grace_slots: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            coverage: 1.0,
            max_slots: 2_000_000,
            transfer_ratio_cutoff: None,
            await_termination: false,
            termination_grace_slots: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Coverage,
    Terminated,
    GraceExpired,
    RatioCutoff,
    SlotLimit,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Coverage => "coverage",
            StopReason::Terminated => "terminated",
            StopReason::GraceExpired => "grace_expired",
            StopReason::RatioCutoff => "ratio_cutoff",
            StopReason::SlotLimit => "slot_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub world: WorldConfig,
    pub mobility: MobilityModel,
    pub variant: Variant,
    pub protocol: ProtocolConfig,
    pub tokens: usize,
    pub aggregate: AggregateSpec,
    pub stop: StopRule,
    pub seed: u64,
    pub exfiltrate: bool,
    /// Check node invariants after every slot; failures abort the trial.
    pub audit: bool,
}

impl TrialConfig {
    pub fn new(world: WorldConfig, mobility: MobilityModel, variant: Variant, tokens: usize, seed: u64) -> Self {
        Self {
            world,
            mobility,
            variant,
            protocol: ProtocolConfig::default(),
            tokens,
            aggregate: AggregateSpec::default(),
            stop: StopRule::default(),
            seed,
            exfiltrate: false,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<(), TrialError> {
        self.mobility.validate()?;
        self.protocol.validate()?;
        let invalid = |name, reason: &str| {
            Err(TrialError::Invalid {
                name,
                reason: reason.to_string(),
            })
        };
        if self.tokens == 0 || self.tokens > self.world.n_nodes {
            return invalid("tokens", "must lie in [1, N]");
        }
        if !(self.stop.coverage > 0.0 && self.stop.coverage <= 1.0) {
            return invalid("stop.coverage", "must lie in (0, 1]");
        }
        if self.stop.transfer_ratio_cutoff.is_some_and(|c| !(c > 0.0)) {
            return invalid("stop.transfer_ratio_cutoff", "must be positive");
        }
        self.aggregate.identity()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub metrics: TrialMetrics,
    pub stop_reason: StopReason,
    /// Every token still in the network with its holder, including transfers still
    /// awaiting an ack (finalized as checkpoints at their sender).
    pub holdings: Vec<(usize, Token)>,
    pub total: Option<Aggregate>,
    pub exfil: Option<ExfilReport>,
}

#[derive(Clone, Debug)]
struct Held {
    token: Token,
    watch: TerminationWatch,
}

/// A transfer sent this slot under ideal transfer; returned to the sender if it misses.
struct InFlight {
    sender: usize,
    to: usize,
    held: Held,
    delivered: bool,
}

struct Node {
    state: NodeState,
    datum: f64,
    queue: VecDeque<Held>,
    log: TransferLog,
    view: GradientView,
    memory: InstanceMemory,
    trace: LevelTrace,
    gradient_seq: u32,
    relay: Option<Gradient>,
    acks_due: Vec<(TokenId, u64)>,
    pending: Vec<PendingTransfer>,
    announced: bool,
    heard: Vec<Request>,
    candidates: Vec<Gradient>,
    rng: RngStream,
}

impl Node {
    fn new(seed: u64, i: usize, datum: f64) -> Self {
        Self {
            state: NodeState::default(),
            datum,
            queue: VecDeque::new(),
            log: TransferLog::default(),
            view: GradientView::default(),
            memory: InstanceMemory::default(),
            trace: LevelTrace::default(),
            gradient_seq: 0,
            relay: None,
            acks_due: Vec::new(),
            pending: Vec::new(),
            announced: false,
            heard: Vec::new(),
            candidates: Vec::new(),
            rng: RngStream::new(seed, StreamId::Protocol(i as u32)),
        }
    }

    fn saw_level_zero(&mut self, slot: u64) {
        self.view.last_level0 = Some(slot);
    }

    fn reply_level(&mut self, variant: Variant, pcfg: &ProtocolConfig, slot: u64) -> Option<Level> {
        if pcfg.reply_lookback_windows > 0 {
            let lookback = u64::from(pcfg.reply_lookback_windows * pcfg.window_slots());
            reported_level(&self.state, variant, &mut self.trace, slot, lookback)
        } else {
            request_level(&self.state, variant)
        }
    }

    /// Takes back a token: level 0, no pending reply or relay.
    fn hold(&mut self) {
        self.state.holder = true;
        self.state.level = Level::Zero;
        self.state.refresh_remaining = 0;
        self.state.pending_request = None;
        self.relay = None;
        self.trace.clear();
    }
}

struct Engine<'a> {
    cfg: &'a TrialConfig,
    world: World,
    channel: SlottedChannel<Message>,
    nodes: Vec<Node>,
    ids: TokenIdAllocator,
    metrics: TrialMetrics,
    visited: usize,
    in_flight: Vec<InFlight>,
    scratch: Vec<usize>,
    /// Last slot in which some unvisited node shared a component with no token.
    last_stranded: Option<u64>,
}

pub fn run_trial(cfg: &TrialConfig) -> Result<TrialOutcome, TrialError> {
    cfg.validate()?;
    Engine::new(cfg)?.run()
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a TrialConfig) -> Result<Self, TrialError> {
        let n = cfg.world.n_nodes;
        let world = World::new(cfg.world.clone(), cfg.mobility, cfg.seed)?;
        let channel = SlottedChannel::new(cfg.world.loss_prob, RngStream::new(cfg.seed, StreamId::Channel))?;
        let mut data_rng = RngStream::new(cfg.seed, StreamId::NodeData);
        let mut nodes: Vec<Node> = (0..n)
            .map(|i| Node::new(cfg.seed, i, f64::from(data_rng.random_range(0..100u32))))
            .collect();

        let mut ids = TokenIdAllocator::default();
        let mut placement = RngStream::new(cfg.seed, StreamId::TokenPlacement);
        let mut starts = index::sample(&mut placement, n, cfg.tokens).into_vec();
        starts.sort_unstable();
        for &i in &starts {
            let mut aggregate = cfg.aggregate.identity()?;
            aggregate.absorb(nodes[i].datum);
            let node = &mut nodes[i];
            node.state = NodeState::holder();
            node.queue.push_back(Held {
                token: Token::new(ids.fresh(), aggregate, i),
                watch: TerminationWatch::default(),
            });
        }

        let mut visited_set = vec![false; n];
        for &i in &starts {
            visited_set[i] = true;
        }
        let metrics = TrialMetrics {
            n_nodes: n,
            initial_tokens: cfg.tokens,
            coverage_timeline: vec![(0, cfg.tokens)],
            visited_set,
            ..TrialMetrics::default()
        };
        Ok(Self {
            cfg,
            world,
            channel,
            nodes,
            ids,
            metrics,
            visited: cfg.tokens,
            in_flight: Vec::new(),
            scratch: Vec::new(),
            last_stranded: None,
        })
    }

    fn window(&self) -> u64 {
        u64::from(self.cfg.protocol.window_slots())
    }

    fn run(mut self) -> Result<TrialOutcome, TrialError> {
        let n = self.nodes.len();
        let target = ((self.cfg.stop.coverage * n as f64) - 1e-9).ceil() as usize;
        let await_termination =
            self.cfg.stop.await_termination && self.cfg.variant == Variant::GradientBias && target == n;
        let window = self.window();
        if self.visited >= n {
            self.metrics.cover_slots = Some(0);
            self.metrics.cover_transactions = Some(0);
        }

        let mut slot = 0u64;
        let reason = loop {
            if self.visited >= target && !await_termination {
                break StopReason::Coverage;
            }
            if let Some(cover) = self.metrics.cover_slots.filter(|_| await_termination) {
                if self.metrics.termination_detect_slot.is_some_and(|d| d >= cover) {
                    break StopReason::Terminated;
                }
                if slot > cover + self.cfg.stop.termination_grace_slots {
                    break StopReason::GraceExpired;
                }
            }
            if let Some(cut) = self.cfg.stop.transfer_ratio_cutoff {
                if self.metrics.token_transfers as f64 >= cut * self.visited as f64 {
                    break StopReason::RatioCutoff;
                }
            }
            if slot >= self.cfg.stop.max_slots {
                break StopReason::SlotLimit;
            }

            self.emit(slot)?;
            self.deliver(slot)?;
            self.end_slot(slot)?;
            if self.cfg.audit {
                self.audit(slot)?;
            }
            if self.visited >= n && self.metrics.cover_slots.is_none() {
                self.metrics.cover_slots = Some(slot);
                self.metrics.cover_transactions = Some(slot / window + 1);
            }
            if self.cfg.variant == Variant::GradientBias && self.visited < n && self.unvisited_stranded() {
                self.last_stranded = Some(slot);
            }
            self.world.advance();
            slot += 1;
        };
        self.metrics.slots_run = slot;
        self.finish(reason)
    }

    fn emit(&mut self, slot: u64) -> Result<(), TrialError> {
        let window = self.window();
        let phase = slot % window;
        let transfer_phase = window - 1;
        let variant = self.cfg.variant;
        let pcfg = &self.cfg.protocol;

        for i in 0..self.nodes.len() {
            if let Some(g) = self.nodes[i].relay.take() {
                if self.cfg.audit {
                    if self.nodes[i].state.level != g.level {
                        return Err(audit(slot, i, "relayed level differs from adopted level"));
                    }
                    if !matches!(g.level, Level::Fraction(_)) {
                        return Err(audit(slot, i, "relayed level is not a fraction"));
                    }
                }
                self.channel.broadcast(i, Message::Gradient(g));
                self.metrics.gradient_msgs += 1;
            }
            for (token_id, version) in std::mem::take(&mut self.nodes[i].acks_due) {
                self.channel.broadcast(
                    i,
                    Message::Ack {
                        token_id,
                        version,
                        from: i,
                    },
                );
                self.metrics.acks += 1;
            }

            if phase == 0 {
                let node = &mut self.nodes[i];
                if variant == Variant::GradientBias && gradient_initiate(&node.state, &node.view, slot, pcfg) {
                    let instance = GradientInstance {
                        origin: i,
                        seq: node.gradient_seq,
                    };
                    node.gradient_seq += 1;
                    node.view.last_initiated = Some(slot);
                    node.memory.remember(instance, slot);
                    self.channel.broadcast(
                        i,
                        Message::Gradient(Gradient {
                            level: Level::One,
                            from: i,
                            instance,
                        }),
                    );
                    self.metrics.gradient_msgs += 1;
                }
                if !self.nodes[i].queue.is_empty() {
                    self.nodes[i].announced = true;
                    self.nodes[i].heard.clear();
                    self.channel.broadcast(i, Message::Announce { holder: i });
                    self.metrics.announces += 1;
                    self.probe_proximity(i);
                }
            } else if phase < transfer_phase {
                let node = &mut self.nodes[i];
                if node.state.pending_request == Some(slot) {
                    node.state.pending_request = None;
                    let req = Request {
                        from: i,
                        level: node.reply_level(variant, pcfg, slot),
                    };
                    self.channel.broadcast(i, Message::Request(req));
                    self.metrics.requests += 1;
                }
            } else {
                if pcfg.reliable_transfer {
                    self.poll_pending(i, slot);
                }
                if std::mem::take(&mut self.nodes[i].announced) {
                    self.transact(i, slot);
                }
            }
        }
        Ok(())
    }

    fn probe_proximity(&mut self, i: usize) {
        self.scratch.clear();
        self.world.neighbors_into(i, &mut self.scratch);
        let unvisited = self.scratch.iter().any(|&j| !self.nodes[j].state.visited);
        self.metrics.proximity.record(self.visited, self.nodes.len(), unvisited);
    }

    /// Transfer phase of a holder that announced this window.
    fn transact(&mut self, i: usize, slot: u64) {
        let variant = self.cfg.variant;
        let node = &mut self.nodes[i];
        let Some(front) = node.queue.front_mut() else {
            return;
        };
        front.watch.observe(&node.heard);
        if variant == Variant::GradientBias && termination_check(&front.watch, &self.cfg.protocol) {
            if self.visited < self.nodes.len() {
                self.metrics.premature_terminations += 1;
                let span = self.cfg.protocol.termination_window_slots() + u64::from(self.cfg.protocol.max_refresh_slots());
                let recently_cut = self.last_stranded.is_some_and(|c| slot.saturating_sub(c) <= span);
                if recently_cut || !self.unvisited_reachable(i) {
                    self.metrics.premature_partitioned += 1;
                }
            } else if self.metrics.termination_detect_slot.is_none() {
                self.metrics.termination_detect_slot = Some(slot);
            }
        }
        let node = &mut self.nodes[i];
        let Some(pick) = select_recipient(&node.heard, variant, &mut node.rng) else {
            return;
        };
        let to = node.heard[pick].from;
        node.heard.clear();
        let Some(held) = node.queue.pop_front() else {
            return;
        };
        node.state.holder = !node.queue.is_empty();
        self.channel.broadcast(
            i,
            Message::Transfer {
                token: Box::new(held.token.clone()),
                watch: held.watch,
                to,
            },
        );
        if self.cfg.protocol.reliable_transfer {
            node.pending.push(PendingTransfer::new(held.token, held.watch, to, slot));
        } else {
            self.in_flight.push(InFlight {
                sender: i,
                to,
                held,
                delivered: false,
            });
        }
    }

    /// Whether any unvisited node lies in the same connected component as `from`.
    fn unvisited_reachable(&self, from: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        let mut nbrs = Vec::new();
        seen[from] = true;
        while let Some(u) = stack.pop() {
            if !self.nodes[u].state.visited {
                return true;
            }
            nbrs.clear();
            self.world.neighbors_into(u, &mut nbrs);
            for &v in &nbrs {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    /// Whether some connected component holds unvisited nodes but no token.
    fn unvisited_stranded(&self) -> bool {
        let n = self.nodes.len();
        let mut comp = vec![false; n];
        let mut stack = Vec::new();
        let mut nbrs = Vec::new();
        for start in 0..n {
            if comp[start] {
                continue;
            }
            comp[start] = true;
            stack.push(start);
            let (mut unvisited, mut token) = (false, false);
            while let Some(u) = stack.pop() {
                let node = &self.nodes[u];
                unvisited |= !node.state.visited;
                token |= !node.queue.is_empty() || !node.pending.is_empty();
                nbrs.clear();
                self.world.neighbors_into(u, &mut nbrs);
                for &v in &nbrs {
                    if !comp[v] {
                        comp[v] = true;
                        stack.push(v);
                    }
                }
            }
            if unvisited && !token {
                return true;
            }
        }
        false
    }

    fn poll_pending(&mut self, i: usize, slot: u64) {
        let pcfg = &self.cfg.protocol;
        let mut k = 0;
        while k < self.nodes[i].pending.len() {
            match self.nodes[i].pending[k].poll(slot, pcfg) {
                TransferAction::Wait => k += 1,
                TransferAction::Resend => {
                    let p = &mut self.nodes[i].pending[k];
                    p.mark_resent(slot);
                    let msg = Message::Transfer {
                        token: Box::new(p.token.clone()),
                        watch: p.watch,
                        to: p.to,
                    };
                    self.channel.broadcast(i, msg);
                    self.metrics.retransmissions += 1;
                    k += 1;
                }
                TransferAction::Checkpoint => {
                    let p = self.nodes[i].pending.swap_remove(k);
                    let fresh = checkpoint_token(&p.token, self.ids.fresh());
                    self.metrics.checkpoints += 1;
                    let node = &mut self.nodes[i];
                    node.queue.push_back(Held {
                        token: fresh,
                        watch: p.watch,
                    });
                    node.hold();
                }
            }
        }
    }

    fn deliver(&mut self, slot: u64) -> Result<(), TrialError> {
        let deliveries = self
            .channel
            .end_slot(slot, self.world.positions(), self.world.grid());
        let variant = self.cfg.variant;
        let pcfg = &self.cfg.protocol;
        let request_slots = pcfg.request_slots;
        for d in deliveries {
            match &d.msg {
                Message::Announce { .. } => {
                    for &r in &d.receivers {
                        let node = &mut self.nodes[r];
                        node.view.last_announce = Some(slot);
                        node.state.last_announce_heard = Some(slot);
                        node.saw_level_zero(slot);
                        if node.state.holder || node.state.pending_request.is_some() {
                            continue;
                        }
                        if let Some(req) = on_announce(&node.state, variant, request_slots, &mut node.rng) {
                            node.state.pending_request = Some(slot + 1 + u64::from(req.offset));
                        }
                    }
                }
                Message::Request(req) => {
                    for &r in &d.receivers {
                        let node = &mut self.nodes[r];
                        if req.level == Some(Level::Zero) {
                            node.saw_level_zero(slot);
                        }
                        if node.announced {
                            node.heard.push(*req);
                        } else if node.state.pending_request.is_some_and(|s| s > slot) {
                            let mut own = node.state;
                            if let Some(level) = node.reply_level(variant, pcfg, slot) {
                                own.level = level;
                            }
                            if suppress_on_overhear(&own, variant, req) {
                                node.state.pending_request = None;
                            }
                        }
                    }
                }
                Message::Transfer { token, watch, to } => {
                    for &r in &d.receivers {
                        self.nodes[r].saw_level_zero(slot);
                    }
                    if d.receivers.contains(to) {
                        self.receive_transfer(d.sender, *to, token, *watch, slot);
                    }
                }
                Message::Ack {
                    token_id, version, ..
                } => {
                    for &r in &d.receivers {
                        self.nodes[r].saw_level_zero(slot);
                    }
                    for &r in &d.receivers {
                        let pending = &mut self.nodes[r].pending;
                        if let Some(pos) = pending.iter().position(|p| p.to == d.sender && p.acked_by(*token_id, *version)) {
                            pending.swap_remove(pos);
                        }
                    }
                }
                Message::Gradient(g) => {
                    for &r in &d.receivers {
                        let node = &mut self.nodes[r];
                        if g.level < Level::One {
                            node.saw_level_zero(slot);
                        }
                        if !node.memory.contains(&g.instance) {
                            node.candidates.push(*g);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn receive_transfer(&mut self, sender: usize, to: usize, token: &Token, watch: TerminationWatch, slot: u64) {
        let reliable = self.cfg.protocol.reliable_transfer;
        let version = token.transfer_count;
        let node = &mut self.nodes[to];
        let was_visited = node.state.visited;
        match node.log.receive(&mut node.state, token.clone(), node.datum) {
            Received::Fresh { token, .. } => {
                node.trace.clear();
                if reliable {
                    node.acks_due.push((token.id, version));
                }
                node.queue.push_back(Held { token, watch });
                if !was_visited {
                    self.visited += 1;
                    self.metrics.visited_set[to] = true;
                    self.metrics.coverage_timeline.push((slot, self.visited));
                }
                self.metrics.token_transfers += 1;
                match self.metrics.transfers_timeline.last_mut() {
                    Some(last) if last.0 == slot => last.1 = self.metrics.token_transfers,
                    _ => self.metrics.transfers_timeline.push((slot, self.metrics.token_transfers)),
                }
                if let Some(f) = self.in_flight.iter_mut().find(|f| f.sender == sender && f.to == to) {
                    f.delivered = true;
                }
            }
            Received::Duplicate => {
                if reliable {
                    node.acks_due.push((token.id, version));
                }
            }
        }
    }

    fn end_slot(&mut self, slot: u64) -> Result<(), TrialError> {
        let pcfg = &self.cfg.protocol;
        let horizon = pcfg.evidence_horizon_slots();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            tick_refresh(&mut node.state);
            if node.candidates.is_empty() {
                continue;
            }
            let candidates = std::mem::take(&mut node.candidates);
            for g in &candidates {
                node.memory.remember(g.instance, slot);
            }
            if let Some(relay) = gradient_receive(&mut node.state, i, &candidates, pcfg)? {
                let until = slot + u64::from(node.state.refresh_remaining);
                node.trace.record(slot + 1, until, relay.level);
                node.relay = Some(relay);
            }
        }
        if slot.is_multiple_of(self.window()) {
            for node in &mut self.nodes {
                node.memory.prune(slot, horizon);
            }
        }
        for f in self.in_flight.drain(..) {
            if f.delivered {
                continue;
            }
            let node = &mut self.nodes[f.sender];
            node.queue.push_front(f.held);
            node.hold();
        }
        Ok(())
    }

    fn audit(&self, slot: u64) -> Result<(), TrialError> {
        for (i, node) in self.nodes.iter().enumerate() {
            node.state
                .check()
                .map_err(|e| audit(slot, i, &e.to_string()))?;
            if node.state.holder != !node.queue.is_empty() {
                return Err(audit(slot, i, "holder flag disagrees with held tokens"));
            }
            if node.state.visited != self.metrics.visited_set[i] {
                return Err(audit(slot, i, "visited flag disagrees with coverage record"));
            }
        }
        Ok(())
    }

    fn finish(mut self, stop_reason: StopReason) -> Result<TrialOutcome, TrialError> {
        let mut holdings = Vec::new();
        for i in 0..self.nodes.len() {
            for p in std::mem::take(&mut self.nodes[i].pending) {
                holdings.push((i, checkpoint_token(&p.token, self.ids.fresh())));
            }
            for held in self.nodes[i].queue.drain(..) {
                holdings.push((i, held.token));
            }
        }
        holdings.sort_by_key(|(node, t)| (*node, t.id));
        let tokens: Vec<Token> = holdings.iter().map(|(_, t)| t.clone()).collect();
        let total = dedup_and_total(&tokens)?;
        let exfil = if self.cfg.exfiltrate {
            let rng = RngStream::new(self.cfg.seed, StreamId::Exfiltration);
            Some(flood_exfiltrate(&self.world, self.cfg.world.loss_prob, rng, &holdings)?)
        } else {
            None
        };
        Ok(TrialOutcome {
            metrics: self.metrics,
            stop_reason,
            holdings,
            total,
            exfil,
        })
    }
}

fn audit(slot: u64, node: usize, reason: &str) -> TrialError {
    TrialError::Audit {
        slot,
        node,
        reason: reason.to_string(),
    }
}
