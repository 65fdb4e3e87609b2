use census_core::aggregation::{AggregateKind, AggregateSpec};
use census_core::protocol::Variant;
use census_core::sim::{MobilityModel, World, WorldConfig, DEFAULT_SLOT_DT};
use census_core::trial::{run_trial, StopReason, TrialConfig};

fn moving() -> MobilityModel {
    MobilityModel::RandomWalk2D {
        leg_len: 100.0,
        v_min: 2.0,
        v_max: 4.0,
    }
}

fn still() -> MobilityModel {
    MobilityModel::RandomWalk2D {
        leg_len: 100.0,
        v_min: 0.0,
        v_max: 0.0,
    }
}

fn world(n: usize, loss: f64) -> WorldConfig {
    WorldConfig::derive(n, 10.0, 100.0, loss, DEFAULT_SLOT_DT).unwrap()
}

fn connected(cfg: &WorldConfig, seed: u64) -> bool {
    let world = World::new(cfg.clone(), still(), seed).unwrap();
    let mut seen = vec![false; world.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in world.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn connected_seed(cfg: &WorldConfig) -> u64 {
    (0..500).find(|&s| connected(cfg, s)).expect("no connected layout in 500 seeds")
}

#[test]
fn invariants_hold_every_slot() {
    for variant in Variant::ALL {
        for (loss, reliable) in [(0.0, false), (0.1, false), (0.1, true)] {
            let mut cfg = TrialConfig::new(world(120, loss), moving(), variant, 3, 21);
            cfg.protocol.reliable_transfer = reliable;
            cfg.audit = true;
            let out = run_trial(&cfg).unwrap_or_else(|e| panic!("{variant} loss={loss} reliable={reliable}: {e}"));
            assert_eq!(out.stop_reason, StopReason::Coverage);
        }
    }
}

#[test]
fn coverage_never_decreases() {
    for variant in Variant::ALL {
        let out = run_trial(&TrialConfig::new(world(150, 0.0), moving(), variant, 1, 4)).unwrap();
        let m = &out.metrics;
        assert!(m.coverage_timeline.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert!(m.transfers_timeline.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(m.coverage_timeline.last().unwrap().1, 150);
        assert_eq!(m.cover_slots, Some(m.coverage_timeline.last().unwrap().0));
    }
}

#[test]
fn ideal_channel_counts_every_node_once() {
    for tokens in [1, 4, 9] {
        for seed in 0..3 {
            let cfg = TrialConfig::new(world(150, 0.0), moving(), Variant::GradientBias, tokens, seed);
            let out = run_trial(&cfg).unwrap();
            let total = out.total.expect("tokens survive");
            assert_eq!(total.contributions(), Some(150), "k = {tokens}, seed = {seed}");
            assert_eq!(out.metrics.checkpoints, 0);
        }
    }
}

#[test]
fn lossy_reliable_transfer_counts_visited_nodes_once() {
    let mut checkpoints = 0;
    for seed in 0..6 {
        let mut cfg = TrialConfig::new(world(100, 0.2), moving(), Variant::GradientBias, 1, seed);
        cfg.protocol.reliable_transfer = true;
        let out = run_trial(&cfg).unwrap();
        let total = out.total.expect("tokens survive");
        assert_eq!(total.contributions(), Some(out.metrics.visited_count() as u64), "seed {seed}");
        checkpoints += out.metrics.checkpoints;
    }
    // Lost acks must have exercised the checkpoint path at least once.
    assert!(checkpoints > 0);
}

#[test]
fn sum_survives_checkpoints() {
    let mut cfg = TrialConfig::new(world(100, 0.2), moving(), Variant::GradientBias, 2, 8);
    cfg.protocol.reliable_transfer = true;
    cfg.aggregate = AggregateSpec::new(AggregateKind::Sum);
    let out = run_trial(&cfg).unwrap();
    assert_eq!(out.total.unwrap().contributions(), Some(100));
}

#[test]
fn termination_waits_for_coverage_on_a_connected_network() {
    let w = world(150, 0.0);
    let seed = connected_seed(&w);
    let mut cfg = TrialConfig::new(w, still(), Variant::GradientBias, 1, seed);
    cfg.stop.await_termination = true;
    let out = run_trial(&cfg).unwrap();
    let m = &out.metrics;
    assert_eq!(m.premature_terminations, 0);
    assert_eq!(out.stop_reason, StopReason::Terminated);
    let lag = m.termination_detect_slot.unwrap() - m.cover_slots.unwrap();
    assert!(lag <= 4 * u64::from(cfg.protocol.max_refresh_slots()), "lag {lag}");
}

#[test]
fn flood_delivers_the_total_to_every_node() {
    let w = world(120, 0.0);
    let seed = connected_seed(&w);
    let mut cfg = TrialConfig::new(w, still(), Variant::GradientBias, 3, seed);
    cfg.exfiltrate = true;
    let out = run_trial(&cfg).unwrap();
    let exfil = out.exfil.unwrap();
    assert_eq!(exfil.fully_informed, 120);
    assert_eq!(exfil.total.and_then(|a| a.contributions()), Some(120));
}

#[test]
fn partial_coverage_stops_early() {
    let mut cfg = TrialConfig::new(world(200, 0.0), moving(), Variant::LocalBias, 1, 2);
    cfg.stop.coverage = 0.6;
    let out = run_trial(&cfg).unwrap();
    assert_eq!(out.stop_reason, StopReason::Coverage);
    assert_eq!(out.metrics.visited_count(), 120);
    assert_eq!(out.metrics.cover_slots, None);
}

#[test]
fn identical_configs_give_identical_outcomes() {
    let mut cfg = TrialConfig::new(world(120, 0.1), moving(), Variant::GradientBias, 2, 77);
    cfg.protocol.reliable_transfer = true;
    assert_eq!(run_trial(&cfg).unwrap(), run_trial(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed = 78;
    assert_ne!(run_trial(&cfg).unwrap().metrics, run_trial(&other).unwrap().metrics);
}
