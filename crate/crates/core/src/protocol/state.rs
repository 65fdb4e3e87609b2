use std::collections::{HashMap, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{Gradient, GradientInstance, Level, ProtocolConfig, ProtocolError, Request, Token, Variant};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeState {
    pub visited: bool,
    pub holder: bool,
    pub level: Level,
    /// Slots left before a fractional level decays to 0; 0 when no timer is armed.
    pub refresh_remaining: u32,
    pub last_announce_heard: Option<u64>,
    /// Absolute slot of this node's scheduled request.
    pub pending_request: Option<u64>,
}

impl Default for NodeState {
    fn default() -> Self {
        Self {
            visited: false,
            holder: false,
            level: Level::One,
            refresh_remaining: 0,
            last_announce_heard: None,
            pending_request: None,
        }
    }
}

impl NodeState {
    /// An initial token holder: visited by default.
    pub fn holder() -> Self {
        Self {
            visited: true,
            holder: true,
            level: Level::Zero,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), ProtocolError> {
        if !self.visited && self.level != Level::One {
            return Err(ProtocolError::Invariant("unvisited nodes sit at level 1"));
        }
        if self.holder && (self.level != Level::Zero || !self.visited) {
            return Err(ProtocolError::Invariant("holders are visited and at level 0"));
        }
        if self.visited && self.level == Level::One {
            return Err(ProtocolError::Invariant("visited nodes are below level 1"));
        }
        if matches!(self.level, Level::Fraction(_)) && self.refresh_remaining == 0 {
            return Err(ProtocolError::Invariant("fractional levels have an armed timer"));
        }
        Ok(())
    }
}

/// A request scheduled in reply to an announce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduledRequest {
    /// Offset into the request slots of the current window.
    pub offset: u32,
    pub level: Option<Level>,
}

pub fn request_level(state: &NodeState, variant: Variant) -> Option<Level> {
    match variant {
        Variant::Pure => None,
        Variant::LocalBias => Some(if state.visited { Level::Zero } else { Level::One }),
        Variant::GradientBias => Some(state.level),
    }
}

/// Picks the request slot for a node that heard an announce. Holders stay silent.
pub fn on_announce<R: Rng + ?Sized>(
    state: &NodeState,
    variant: Variant,
    request_slots: u32,
    rng: &mut R,
) -> Option<ScheduledRequest> {
    if state.holder {
        return None;
    }
    let t = request_slots.max(1);
    let (lo, hi) = match variant {
        Variant::LocalBias if state.visited => (t / 2, t),
        Variant::LocalBias => (0, t.div_ceil(2)),
        Variant::Pure | Variant::GradientBias => (0, t),
    };
    Some(ScheduledRequest {
        offset: rng.random_range(lo..hi.max(lo + 1)),
        level: request_level(state, variant),
    })
}

/// Whether a node with a pending request should drop it after overhearing `overheard`.
pub fn suppress_on_overhear(state: &NodeState, variant: Variant, overheard: &Request) -> bool {
    match variant {
        Variant::Pure | Variant::LocalBias => true,
        Variant::GradientBias => overheard.level.is_some_and(|l| l > state.level),
    }
}

/// Chooses which requester receives the token, as an index into `requests`.
pub fn select_recipient<R: Rng + ?Sized>(requests: &[Request], variant: Variant, rng: &mut R) -> Option<usize> {
    if requests.is_empty() {
        return None;
    }
    let pool: Vec<usize> = match variant {
        Variant::Pure => (0..requests.len()).collect(),
        Variant::LocalBias => {
            let fresh: Vec<usize> = (0..requests.len())
                .filter(|&i| requests[i].level == Some(Level::One))
                .collect();
            if fresh.is_empty() {
                (0..requests.len()).collect()
            } else {
                fresh
            }
        }
        Variant::GradientBias => {
            let best = requests.iter().map(|r| r.level).max().flatten();
            (0..requests.len()).filter(|&i| requests[i].level == best).collect()
        }
    };
    pool.choose(rng).copied()
}

/// Takes possession of `token`. Returns whether the node's datum was merged in.
pub fn on_token_receive(state: &mut NodeState, token: &mut Token, datum: f64) -> bool {
    let fresh = !state.visited;
    if fresh {
        state.visited = true;
        token.aggregate.absorb(datum);
    }
    state.holder = true;
    state.level = Level::Zero;
    state.refresh_remaining = 0;
    state.pending_request = None;
    token.transfer_count += 1;
    fresh
}

/// What a node has recently overheard, as input to gradient initiation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GradientView {
    pub last_announce: Option<u64>,
    /// Last slot a neighbor revealed itself at level 0.
    pub last_level0: Option<u64>,
    /// Last slot this node started a gradient.
    pub last_initiated: Option<u64>,
}

/// Whether an unvisited node should start a gradient at slot `now`.
pub fn gradient_initiate(state: &NodeState, view: &GradientView, now: u64, cfg: &ProtocolConfig) -> bool {
    if state.level != Level::One {
        return false;
    }
    let window = u64::from(cfg.window_slots());
    let announce_nearby = view.last_announce.is_some_and(|s| now.saturating_sub(s) <= window);
    if announce_nearby {
        return false;
    }
    let horizon = cfg.evidence_horizon_slots();
    let recent = |slot: Option<u64>| slot.is_some_and(|s| now.saturating_sub(s) < horizon);
    // Without evidence of a visited neighbor, probe once per horizon.
    recent(view.last_level0) || !recent(view.last_initiated)
}

/// Applies the gradients a node heard in one slot. A level-0 non-holder adopts the
/// steepest candidate and returns the level to rebroadcast.
pub fn gradient_receive(
    state: &mut NodeState,
    me: usize,
    candidates: &[Gradient],
    cfg: &ProtocolConfig,
) -> Result<Option<Gradient>, ProtocolError> {
    if state.holder || state.level != Level::Zero {
        return Ok(None);
    }
    let Some(best) = candidates.iter().max_by(|a, b| a.level.cmp(&b.level).then(b.from.cmp(&a.from))) else {
        return Ok(None);
    };
    let adopted = best.level.halved();
    if adopted == Level::Zero {
        return Ok(None);
    }
    if let (Some(max), Some(depth)) = (cfg.gradient_max_depth, adopted.depth()) {
        if depth > max {
            return Ok(None);
        }
    }
    state.refresh_remaining = refresh_timer_duration(adopted, cfg)?;
    state.level = adopted;
    Ok(Some(Gradient {
        level: adopted,
        from: me,
        instance: best.instance,
    }))
}

/// Slots a freshly adopted level persists before decaying to 0.
pub fn refresh_timer_duration(level: Level, cfg: &ProtocolConfig) -> Result<u32, ProtocolError> {
    match level {
        Level::Fraction(_) => {
            let slots = cfg.refresh_constant * level.value() * f64::from(cfg.window_slots());
            Ok(slots.round().max(1.0) as u32)
        }
        other => Err(ProtocolError::RefreshLevel(other)),
    }
}

/// Advances the refresh timer by one slot. Returns true when the level just decayed.
pub fn tick_refresh(state: &mut NodeState) -> bool {
    if state.refresh_remaining == 0 {
        return false;
    }
    state.refresh_remaining -= 1;
    if state.refresh_remaining == 0 && matches!(state.level, Level::Fraction(_)) {
        state.level = Level::Zero;
        return true;
    }
    false
}

/// Levels a node held recently, as `(first slot, last slot, level)` spans.
///
/// Gradient waves leave every window at the same phase, so a deep node whose level
/// lasts a single slot is lit at the same phase every window. Replies report the
/// highest level held over the last window so that phase does not decide whether
/// the holder ever sees it.
#[derive(Clone, Debug, Default)]
pub struct LevelTrace {
    spans: VecDeque<(u64, u64, Level)>,
}

impl LevelTrace {
    /// Records a level held from `from` through `to` inclusive.
    pub fn record(&mut self, from: u64, to: u64, level: Level) {
        self.spans.push_back((from, to, level));
    }

    pub fn clear(&mut self) {
        self.spans.clear();
    }

    /// Highest level held during the `lookback` slots ending at `now`.
    pub fn peak(&mut self, now: u64, lookback: u64) -> Level {
        let start = (now + 1).saturating_sub(lookback);
        while self.spans.front().is_some_and(|&(_, to, _)| to < start) {
            self.spans.pop_front();
        }
        self.spans
            .iter()
            .filter(|&&(from, _, _)| from <= now)
            .map(|&(_, _, l)| l)
            .max()
            .unwrap_or(Level::Zero)
    }
}

/// Level a node attaches to its reply: its current level, raised to the highest
/// level it held over the last window under gradient bias.
pub fn reported_level(state: &NodeState, variant: Variant, trace: &mut LevelTrace, now: u64, window: u64) -> Option<Level> {
    match variant {
        Variant::GradientBias if state.visited && !state.holder => Some(state.level.max(trace.peak(now, window))),
        _ => request_level(state, variant),
    }
}

/// Gradient waves a node has already heard. A wave passes each node at most once,
/// which stops nodes with short timers from re-adopting the echo of their own relay.
#[derive(Clone, Debug, Default)]
pub struct InstanceMemory {
    seen: HashMap<GradientInstance, u64>,
    order: VecDeque<(GradientInstance, u64)>,
}

impl InstanceMemory {
    pub fn contains(&self, inst: &GradientInstance) -> bool {
        self.seen.contains_key(inst)
    }

    pub fn remember(&mut self, inst: GradientInstance, now: u64) {
        if self.seen.insert(inst, now).is_none() {
            self.order.push_back((inst, now));
        }
    }

    /// Forgets waves first heard more than `horizon` slots ago.
    pub fn prune(&mut self, now: u64, horizon: u64) {
        while let Some(&(inst, at)) = self.order.front() {
            if now.saturating_sub(at) <= horizon {
                break;
            }
            self.order.pop_front();
            self.seen.remove(&inst);
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::Aggregate;
    use crate::protocol::TokenId;
    use crate::sim::{RngStream, StreamId};

    fn rng() -> RngStream {
        RngStream::new(11, StreamId::Protocol(0))
    }

    fn visited_at(level: Level) -> NodeState {
        NodeState {
            visited: true,
            level,
            refresh_remaining: u32::from(matches!(level, Level::Fraction(_))),
            ..NodeState::default()
        }
    }

    fn req(from: usize, level: Option<Level>) -> Request {
        Request { from, level }
    }

    fn grad(level: Level, from: usize) -> Gradient {
        Gradient {
            level,
            from,
            instance: GradientInstance { origin: from, seq: 0 },
        }
    }

    #[test]
    fn local_bias_request_halves() {
        let mut r = rng();
        let fresh = NodeState::default();
        let old = visited_at(Level::Zero);
        for _ in 0..200 {
            let a = on_announce(&fresh, Variant::LocalBias, 4, &mut r).unwrap();
            assert!(a.offset < 2);
            let b = on_announce(&old, Variant::LocalBias, 4, &mut r).unwrap();
            assert!((2..4).contains(&b.offset));
        }
    }

    #[test]
    fn local_bias_three_slots_overlap_in_middle() {
        let mut r = rng();
        let mut fresh_slots = [false; 3];
        let mut old_slots = [false; 3];
        for _ in 0..200 {
            fresh_slots[on_announce(&NodeState::default(), Variant::LocalBias, 3, &mut r).unwrap().offset as usize] = true;
            old_slots[on_announce(&visited_at(Level::Zero), Variant::LocalBias, 3, &mut r).unwrap().offset as usize] = true;
        }
        assert_eq!(fresh_slots, [true, true, false]);
        assert_eq!(old_slots, [false, true, true]);
    }

    #[test]
    fn gradient_request_copies_level() {
        let mut r = rng();
        let s = visited_at(Level::Fraction(2));
        for _ in 0..100 {
            let a = on_announce(&s, Variant::GradientBias, 4, &mut r).unwrap();
            assert_eq!(a.level, Some(Level::Fraction(2)));
            assert!(a.offset < 4);
        }
        assert_eq!(on_announce(&s, Variant::Pure, 4, &mut r).unwrap().level, None);
        assert_eq!(on_announce(&NodeState::holder(), Variant::Pure, 4, &mut r), None);
    }

    #[test]
    fn gradient_suppression_is_strict() {
        let one = NodeState::default();
        assert!(!suppress_on_overhear(&one, Variant::GradientBias, &req(1, Some(Level::Fraction(1)))));
        let half = visited_at(Level::Fraction(1));
        assert!(!suppress_on_overhear(&half, Variant::GradientBias, &req(1, Some(Level::Fraction(1)))));
        assert!(suppress_on_overhear(&half, Variant::GradientBias, &req(1, Some(Level::One))));
        assert!(suppress_on_overhear(&one, Variant::LocalBias, &req(1, Some(Level::Zero))));
        assert!(suppress_on_overhear(&one, Variant::Pure, &req(1, None)));
    }

    #[test]
    fn recipient_selection() {
        let mut r = rng();
        let g = [req(1, Some(Level::One)), req(2, Some(Level::Fraction(1))), req(3, Some(Level::Zero))];
        for _ in 0..50 {
            assert_eq!(select_recipient(&g, Variant::GradientBias, &mut r), Some(0));
        }
        let l = [req(1, Some(Level::Zero)), req(2, Some(Level::One))];
        for _ in 0..50 {
            assert_eq!(select_recipient(&l, Variant::LocalBias, &mut r), Some(1));
        }
        for v in Variant::ALL {
            assert_eq!(select_recipient(&[], v, &mut r), None);
        }
    }

    #[test]
    fn gradient_ties_are_random() {
        let mut r = rng();
        let g = [req(1, Some(Level::Fraction(1))), req(2, Some(Level::Fraction(1))), req(3, Some(Level::Zero))];
        let mut hits = [0u32; 3];
        for _ in 0..400 {
            hits[select_recipient(&g, Variant::GradientBias, &mut r).unwrap()] += 1;
        }
        assert!(hits[0] > 150 && hits[1] > 150 && hits[2] == 0, "{hits:?}");
    }

    #[test]
    fn token_receive_merges_once() {
        let mut s = NodeState::default();
        let mut t = Token::new(TokenId(1), Aggregate::Count { n: 41 }, 0);
        assert!(on_token_receive(&mut s, &mut t, 5.0));
        assert_eq!(t.aggregate, Aggregate::Count { n: 42 });
        assert!(s.holder && s.visited && s.level == Level::Zero);
        s.holder = false;
        assert!(!on_token_receive(&mut s, &mut t, 5.0));
        assert_eq!(t.aggregate, Aggregate::Count { n: 42 });
        assert_eq!(t.transfer_count, 2);

        let mut m = Token::new(TokenId(2), Aggregate::Min { v: 7.0 }, 0);
        on_token_receive(&mut NodeState::default(), &mut m, 3.0);
        assert_eq!(m.aggregate, Aggregate::Min { v: 3.0 });
    }

    #[test]
    fn initiation_rules() {
        let cfg = ProtocolConfig::default();
        let one = NodeState::default();
        let announce = GradientView {
            last_announce: Some(100),
            last_level0: Some(99),
            last_initiated: None,
        };
        assert!(!gradient_initiate(&one, &announce, 100, &cfg));
        let silent = GradientView {
            last_announce: None,
            last_level0: Some(90),
            last_initiated: Some(95),
        };
        assert!(gradient_initiate(&one, &silent, 100, &cfg));
        assert!(!gradient_initiate(&visited_at(Level::Fraction(1)), &silent, 100, &cfg));
        let stale = GradientView {
            last_level0: Some(10),
            ..silent
        };
        assert!(!gradient_initiate(&one, &stale, 100, &cfg));
        assert!(gradient_initiate(&one, &GradientView::default(), 100, &cfg));
        let probe = GradientView {
            last_initiated: Some(60),
            ..stale
        };
        assert!(gradient_initiate(&one, &probe, 100, &cfg));
    }

    #[test]
    fn gradient_halves_and_relays() {
        let cfg = ProtocolConfig::default();
        let mut s = visited_at(Level::Zero);
        let out = gradient_receive(&mut s, 9, &[grad(Level::One, 4)], &cfg).unwrap().unwrap();
        assert_eq!(out.level, Level::Fraction(1));
        assert_eq!(s.level, Level::Fraction(1));
        assert_eq!(s.refresh_remaining, 20);

        let mut s = visited_at(Level::Zero);
        let out = gradient_receive(&mut s, 9, &[grad(Level::Fraction(1), 4)], &cfg).unwrap().unwrap();
        assert_eq!(out.level, Level::Fraction(2));

        let mut s = visited_at(Level::Fraction(2));
        assert_eq!(gradient_receive(&mut s, 9, &[grad(Level::One, 4)], &cfg).unwrap(), None);
        assert_eq!(s.level, Level::Fraction(2));
    }

    #[test]
    fn simultaneous_gradients_take_steepest() {
        let cfg = ProtocolConfig::default();
        let mut s = visited_at(Level::Zero);
        let got = gradient_receive(&mut s, 9, &[grad(Level::Fraction(3), 1), grad(Level::One, 2), grad(Level::Fraction(1), 3)], &cfg)
            .unwrap()
            .unwrap();
        assert_eq!(got.level, Level::Fraction(1));
        assert_eq!(got.instance.origin, 2);
    }

    #[test]
    fn depth_cap() {
        let cfg = ProtocolConfig {
            gradient_max_depth: Some(2),
            ..ProtocolConfig::default()
        };
        let mut s = visited_at(Level::Zero);
        assert!(gradient_receive(&mut s, 9, &[grad(Level::Fraction(2), 1)], &cfg).unwrap().is_none());
        assert_eq!(s.level, Level::Zero);
    }

    #[test]
    fn refresh_durations() {
        let cfg = ProtocolConfig::default();
        assert_eq!(refresh_timer_duration(Level::Fraction(1), &cfg), Ok(20));
        assert_eq!(refresh_timer_duration(Level::Fraction(10), &cfg), Ok(1));
        assert!(refresh_timer_duration(Level::One, &cfg).is_err());
        assert!(refresh_timer_duration(Level::Zero, &cfg).is_err());
    }

    #[test]
    fn timer_expiry_resets_level() {
        let mut s = visited_at(Level::Zero);
        gradient_receive(&mut s, 9, &[grad(Level::Fraction(3), 0)], &ProtocolConfig::default()).unwrap();
        let dur = s.refresh_remaining;
        for _ in 1..dur {
            assert!(!tick_refresh(&mut s));
        }
        assert!(tick_refresh(&mut s));
        assert_eq!(s.level, Level::Zero);
        s.check().unwrap();
    }

    #[test]
    fn invariants_flag_bad_states() {
        NodeState::default().check().unwrap();
        NodeState::holder().check().unwrap();
        let bad = NodeState {
            level: Level::Zero,
            ..NodeState::default()
        };
        assert!(bad.check().is_err());
        let bad = NodeState {
            visited: true,
            level: Level::Fraction(1),
            ..NodeState::default()
        };
        assert!(bad.check().is_err());
    }

    #[test]
    fn trace_reports_recent_peak() {
        let mut t = LevelTrace::default();
        t.record(10, 10, Level::Fraction(6));
        t.record(12, 13, Level::Fraction(4));
        let s = visited_at(Level::Zero);
        assert_eq!(reported_level(&s, Variant::GradientBias, &mut t, 9, 5), Some(Level::Zero));
        assert_eq!(reported_level(&s, Variant::GradientBias, &mut t, 11, 5), Some(Level::Fraction(6)));
        assert_eq!(reported_level(&s, Variant::GradientBias, &mut t, 14, 5), Some(Level::Fraction(4)));
        assert_eq!(reported_level(&s, Variant::GradientBias, &mut t, 18, 5), Some(Level::Zero));
        assert_eq!(reported_level(&s, Variant::LocalBias, &mut t, 14, 5), Some(Level::Zero));
        let fresh = NodeState::default();
        assert_eq!(reported_level(&fresh, Variant::GradientBias, &mut t, 14, 5), Some(Level::One));
    }

    #[test]
    fn instance_memory_prunes() {
        let mut m = InstanceMemory::default();
        let a = GradientInstance { origin: 1, seq: 0 };
        let b = GradientInstance { origin: 2, seq: 0 };
        m.remember(a, 0);
        m.remember(b, 10);
        m.prune(30, 25);
        assert!(!m.contains(&a));
        assert!(m.contains(&b));
        assert_eq!(m.len(), 1);
    }
}
