use census_core::sim::{MobilityModel, World, WorldConfig, DEFAULT_SLOT_DT};

// Upper 1% point of chi-square with 15 degrees of freedom.
const CHI2_15_P01: f64 = 30.578;

fn rw2d(speed: f64) -> MobilityModel {
    MobilityModel::RandomWalk2D {
        leg_len: 100.0,
        v_min: speed - 1.0,
        v_max: speed + 1.0,
    }
}

#[test]
fn random_walk_positions_stay_uniform() {
    let mut cells = [0u64; 16];
    // One-second slots and snapshots 1000 s apart: thirty legs separate successive
    // snapshots, so the walk has forgotten where it was.
    for seed in 0..20 {
        let cfg = WorldConfig::derive(100, 10.0, 100.0, 0.0, 1.0).unwrap();
        let side = cfg.side;
        let mut world = World::new(cfg, rw2d(3.0), seed).unwrap();
        for _ in 0..10 {
            for _ in 0..1000 {
                world.advance();
            }
            for p in world.positions() {
                let cx = ((p.x / side * 4.0) as usize).min(3);
                let cy = ((p.y / side * 4.0) as usize).min(3);
                cells[cy * 4 + cx] += 1;
            }
        }
    }
    let total: u64 = cells.iter().sum();
    let expected = total as f64 / 16.0;
    let chi2: f64 = cells.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_15_P01, "chi2 = {chi2:.2}, cells = {cells:?}");
}

#[test]
fn positions_stay_inside_the_square() {
    let models = [
        rw2d(15.0),
        MobilityModel::RandomWaypoint {
            pause: 2.0,
            v_min: 14.0,
            v_max: 16.0,
        },
        MobilityModel::GaussMarkov {
            alpha: 0.75,
            mean_speed: 15.0,
            speed_sigma: 0.5,
            direction_sigma: std::f64::consts::FRAC_PI_4,
            update_interval: 1.0,
        },
    ];
    for model in models {
        let cfg = WorldConfig::derive(100, 10.0, 100.0, 0.0, DEFAULT_SLOT_DT).unwrap();
        let side = cfg.side;
        let mut world = World::new(cfg, model, 3).unwrap();
        for _ in 0..4000 {
            world.advance();
            for p in world.positions() {
                assert!((0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y), "{} left the square: {p:?}", model.name());
            }
        }
    }
}

#[test]
fn mean_degree_matches_density() {
    for d in [7.0, 10.0, 13.0] {
        let cfg = WorldConfig::derive(1000, d, 100.0, 0.0, DEFAULT_SLOT_DT).unwrap();
        let (range, side) = (cfg.range, cfg.side);
        let mut world = World::new(cfg, rw2d(3.0), 17).unwrap();
        let (mut sum, mut count) = (0usize, 0usize);
        for _ in 0..20 {
            for _ in 0..500 {
                world.advance();
            }
            for (i, p) in world.positions().iter().enumerate() {
                let interior = p.x > range && p.y > range && p.x < side - range && p.y < side - range;
                if interior {
                    sum += world.neighbors(i).len();
                    count += 1;
                }
            }
        }
        let mean = sum as f64 / count as f64;
        let expected = d * 999.0 / 1000.0;
        assert!((mean - expected).abs() < 0.5, "d = {d}: mean interior degree {mean:.2}");
    }
}

#[test]
fn same_seed_same_trajectories() {
    let run = |seed| {
        let cfg = WorldConfig::derive(150, 10.0, 100.0, 0.0, DEFAULT_SLOT_DT).unwrap();
        let mut world = World::new(cfg, rw2d(3.0), seed).unwrap();
        for _ in 0..1000 {
            world.advance();
        }
        world.positions().to_vec()
    };
    assert_eq!(run(8), run(8));
    assert_ne!(run(8), run(9));
}
