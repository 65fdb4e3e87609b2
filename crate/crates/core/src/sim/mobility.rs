use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{invalid, Point, SimError};

/// Node motion models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MobilityModel {
    /// Straight legs of length `leg_len` in a uniform direction at a uniform
    /// speed in `[v_min, v_max]`.
    RandomWalk2D { leg_len: f64, v_min: f64, v_max: f64 },
    /// Travel to a uniform waypoint, then pause.
    RandomWaypoint { pause: f64, v_min: f64, v_max: f64 },
    /// Speed and heading are AR(1) processes refreshed every `update_interval` seconds.
    GaussMarkov {
        alpha: f64,
        mean_speed: f64,
        speed_sigma: f64,
        direction_sigma: f64,
        update_interval: f64,
    },
}

impl MobilityModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let check_speeds = |v_min: f64, v_max: f64| {
            if !(v_min >= 0.0) {
                return Err(invalid("v_min", v_min, "must be non-negative"));
            }
            if !(v_max >= v_min) {
                return Err(invalid("v_max", v_max, "must be at least v_min"));
            }
            Ok(())
        };
        match *self {
            MobilityModel::RandomWalk2D {
                leg_len,
                v_min,
                v_max,
            } => {
                if !(leg_len > 0.0) {
                    return Err(invalid("leg_len", leg_len, "must be positive"));
                }
                check_speeds(v_min, v_max)
            }
            MobilityModel::RandomWaypoint { pause, v_min, v_max } => {
                if !(pause >= 0.0) {
                    return Err(invalid("pause", pause, "must be non-negative"));
                }
                check_speeds(v_min, v_max)
            }
            MobilityModel::GaussMarkov {
                alpha,
                mean_speed,
                speed_sigma,
                direction_sigma,
                update_interval,
            } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(invalid("alpha", alpha, "must lie in [0, 1]"));
                }
                if !(mean_speed >= 0.0) {
                    return Err(invalid("mean_speed", mean_speed, "must be non-negative"));
                }
                if !(speed_sigma >= 0.0) {
                    return Err(invalid("speed_sigma", speed_sigma, "must be non-negative"));
                }
                if !(direction_sigma >= 0.0) {
                    return Err(invalid("direction_sigma", direction_sigma, "must be non-negative"));
                }
                if !(update_interval > 0.0) {
                    return Err(invalid("update_interval", update_interval, "must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Admissible speed interval while moving.
    pub fn speed_bounds(&self) -> (f64, f64) {
        match *self {
            MobilityModel::RandomWalk2D { v_min, v_max, .. }
            | MobilityModel::RandomWaypoint { v_min, v_max, .. } => (v_min, v_max),
            MobilityModel::GaussMarkov { mean_speed, .. } => (0.0, 2.0 * mean_speed),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MobilityModel::RandomWalk2D { .. } => "rw2d",
            MobilityModel::RandomWaypoint { .. } => "rwp",
            MobilityModel::GaussMarkov { .. } => "gm",
        }
    }

    fn draw_speed<R: Rng + ?Sized>(v_min: f64, v_max: f64, rng: &mut R) -> f64 {
        if v_max > v_min {
            rng.random_range(v_min..=v_max)
        } else {
            v_min
        }
    }
}

/// Model-specific progress state of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MotionPhase {
    Leg { remaining: f64 },
    Travel { target: Point },
    Pause { remaining: f64 },
    Correlated { until_update: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub position: Point,
    pub heading: f64,
    pub speed: f64,
    pub phase: MotionPhase,
}

impl Kinematics {
    /// Uniform initial placement with a fresh model state.
    pub fn spawn<R: Rng + ?Sized>(model: &MobilityModel, side: f64, rng: &mut R) -> Self {
        let position = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
        let mut k = Kinematics {
            position,
            heading: 0.0,
            speed: 0.0,
            phase: MotionPhase::Leg { remaining: 0.0 },
        };
        match *model {
            MobilityModel::RandomWalk2D {
                leg_len,
                v_min,
                v_max,
            } => new_leg(&mut k, leg_len, v_min, v_max, rng),
            MobilityModel::RandomWaypoint { v_min, v_max, .. } => {
                new_waypoint(&mut k, side, v_min, v_max, rng)
            }
            MobilityModel::GaussMarkov {
                mean_speed,
                update_interval,
                ..
            } => {
                k.heading = rng.random::<f64>() * TAU;
                k.speed = mean_speed;
                k.phase = MotionPhase::Correlated {
                    until_update: update_interval,
                };
            }
        }
        k
    }
}

fn new_leg<R: Rng + ?Sized>(k: &mut Kinematics, leg_len: f64, v_min: f64, v_max: f64, rng: &mut R) {
    k.heading = rng.random::<f64>() * TAU;
    k.speed = MobilityModel::draw_speed(v_min, v_max, rng);
    k.phase = MotionPhase::Leg { remaining: leg_len };
}

fn new_waypoint<R: Rng + ?Sized>(k: &mut Kinematics, side: f64, v_min: f64, v_max: f64, rng: &mut R) {
    let target = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
    k.speed = MobilityModel::draw_speed(v_min, v_max, rng);
    k.heading = normalize_angle((target.y - k.position.y).atan2(target.x - k.position.x));
    k.phase = MotionPhase::Travel { target };
}

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Folds a coordinate back into `[0, side]`, returning whether the direction
/// along that axis flipped an odd number of times.
fn fold(mut c: f64, side: f64) -> (f64, bool) {
    let mut flipped = false;
    while c < 0.0 || c > side {
        if c < 0.0 {
            c = -c;
        } else {
            c = 2.0 * side - c;
        }
        flipped = !flipped;
    }
    (c, flipped)
}

/// Moves `dist` along the heading with specular reflection on the square's walls.
fn reflect_move(k: &mut Kinematics, dist: f64, side: f64) {
    let (mut vx, mut vy) = (k.heading.cos(), k.heading.sin());
    let (x, fx) = fold(k.position.x + vx * dist, side);
    let (y, fy) = fold(k.position.y + vy * dist, side);
    if fx {
        vx = -vx;
    }
    if fy {
        vy = -vy;
    }
    k.position = Point::new(x, y);
    if fx || fy {
        k.heading = normalize_angle(vy.atan2(vx));
    }
}

/// Advances one node by `dt` seconds.
pub fn step_mobility<R: Rng + ?Sized>(
    model: &MobilityModel,
    k: &Kinematics,
    side: f64,
    dt: f64,
    rng: &mut R,
) -> Kinematics {
    let mut k = *k;
    let mut t = dt;
    match *model {
        MobilityModel::RandomWalk2D {
            leg_len,
            v_min,
            v_max,
        } => {
            while t > 0.0 && k.speed > 0.0 {
                let remaining = match k.phase {
                    MotionPhase::Leg { remaining } => remaining,
                    _ => 0.0,
                };
                let leg_time = remaining / k.speed;
                if leg_time > t {
                    let d = k.speed * t;
                    reflect_move(&mut k, d, side);
                    k.phase = MotionPhase::Leg {
                        remaining: remaining - d,
                    };
                    break;
                }
                reflect_move(&mut k, remaining, side);
                t -= leg_time;
                new_leg(&mut k, leg_len, v_min, v_max, rng);
            }
        }
        MobilityModel::RandomWaypoint { pause, v_min, v_max } => {
            while t > 0.0 {
                match k.phase {
                    MotionPhase::Pause { remaining } => {
                        if remaining > t {
                            k.phase = MotionPhase::Pause {
                                remaining: remaining - t,
                            };
                            break;
                        }
                        t -= remaining;
                        new_waypoint(&mut k, side, v_min, v_max, rng);
                    }
                    MotionPhase::Travel { target } => {
                        if k.speed <= 0.0 {
                            break;
                        }
                        let dist = k.position.dist(target);
                        let reach = k.speed * t;
                        if reach < dist {
                            let f = reach / dist;
                            k.position = Point::new(
                                k.position.x + (target.x - k.position.x) * f,
                                k.position.y + (target.y - k.position.y) * f,
                            );
                            break;
                        }
                        k.position = target;
                        t -= dist / k.speed;
                        k.phase = MotionPhase::Pause { remaining: pause };
                    }
                    _ => new_waypoint(&mut k, side, v_min, v_max, rng),
                }
            }
        }
        MobilityModel::GaussMarkov {
            alpha,
            mean_speed,
            speed_sigma,
            direction_sigma,
            update_interval,
        } => {
            let noise = (1.0 - alpha * alpha).sqrt();
            while t > 0.0 {
                let until = match k.phase {
                    MotionPhase::Correlated { until_update } => until_update,
                    _ => 0.0,
                };
                if until > t {
                    let dist = k.speed * t;
                    reflect_move(&mut k, dist, side);
                    k.phase = MotionPhase::Correlated {
                        until_update: until - t,
                    };
                    break;
                }
                let dist = k.speed * until;
                reflect_move(&mut k, dist, side);
                t -= until;
                // The mean heading tracks the current heading, so only the noise
                // term turns the node.
                let ws: f64 = rng.sample(StandardNormal);
                let wd: f64 = rng.sample(StandardNormal);
                let speed = alpha * k.speed + (1.0 - alpha) * mean_speed + noise * speed_sigma * ws;
                k.speed = speed.clamp(0.0, 2.0 * mean_speed);
                k.heading = normalize_angle(k.heading + noise * direction_sigma * wd);
                k.phase = MotionPhase::Correlated {
                    until_update: update_interval,
                };
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{RngStream, StreamId};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rng() -> RngStream {
        RngStream::new(1, StreamId::Motion(0))
    }

    const WALK: MobilityModel = MobilityModel::RandomWalk2D {
        leg_len: 100.0,
        v_min: 1.0,
        v_max: 1.0,
    };

    fn at(x: f64, y: f64, heading: f64, speed: f64) -> Kinematics {
        Kinematics {
            position: Point::new(x, y),
            heading,
            speed,
            phase: MotionPhase::Leg { remaining: 100.0 },
        }
    }

    #[test]
    fn zero_speed_stays_put() {
        let still = MobilityModel::RandomWalk2D {
            leg_len: 5.0,
            v_min: 0.0,
            v_max: 0.0,
        };
        let k = at(3.0, 4.0, 1.0, 0.0);
        let next = step_mobility(&still, &k, 10.0, 1.0, &mut rng());
        assert_eq!(next.position, k.position);
    }

    #[test]
    fn straight_line_step() {
        let k = at(3.0, 4.0, 0.0, 1.0);
        let next = step_mobility(&WALK, &k, 10.0, 1.0, &mut rng());
        assert!((next.position.x - 4.0).abs() < 1e-12);
        assert!((next.position.y - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mirror_reflection_at_wall() {
        let side = 10.0;
        let k = at(side - 0.5, 5.0, 0.0, 1.0);
        let next = step_mobility(&WALK, &k, side, 1.0, &mut rng());
        assert!((next.position.x - (side - 0.5)).abs() < 1e-12);
        assert!((next.position.y - 5.0).abs() < 1e-12);
        assert!((next.heading - PI).abs() < 1e-12);
    }

    #[test]
    fn corner_reflection_flips_both_axes() {
        let side = 10.0;
        let h = PI / 4.0;
        let k = at(9.8, 9.8, h, 1.0);
        let next = step_mobility(&WALK, &k, side, 1.0, &mut rng());
        let d = 1.0 / 2f64.sqrt();
        assert!((next.position.x - (2.0 * side - 9.8 - d)).abs() < 1e-9);
        assert!((next.position.y - (2.0 * side - 9.8 - d)).abs() < 1e-9);
        assert!((next.heading - 5.0 * PI / 4.0).abs() < 1e-9);
    }

    #[test]
    fn waypoint_pauses_on_arrival() {
        let model = MobilityModel::RandomWaypoint {
            pause: 2.0,
            v_min: 1.0,
            v_max: 1.0,
        };
        let k = Kinematics {
            position: Point::new(0.0, 0.0),
            heading: 0.0,
            speed: 1.0,
            phase: MotionPhase::Travel {
                target: Point::new(0.5, 0.0),
            },
        };
        let next = step_mobility(&model, &k, 10.0, 1.0, &mut rng());
        assert_eq!(next.position, Point::new(0.5, 0.0));
        match next.phase {
            MotionPhase::Pause { remaining } => assert!((remaining - 1.5).abs() < 1e-12),
            other => panic!("unexpected phase {other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_models() {
        let bad_alpha = MobilityModel::GaussMarkov {
            alpha: 1.5,
            mean_speed: 3.0,
            speed_sigma: 0.5,
            direction_sigma: 0.5,
            update_interval: 1.0,
        };
        assert!(bad_alpha.validate().is_err());
        let bad_leg = MobilityModel::RandomWalk2D {
            leg_len: 0.0,
            v_min: 1.0,
            v_max: 2.0,
        };
        assert!(bad_leg.validate().is_err());
        let bad_pause = MobilityModel::RandomWaypoint {
            pause: -1.0,
            v_min: 1.0,
            v_max: 2.0,
        };
        assert!(bad_pause.validate().is_err());
    }

    fn models() -> impl Strategy<Value = MobilityModel> {
        prop_oneof![
            (1.0f64..50.0, 0.0f64..5.0, 0.0f64..5.0).prop_map(|(leg_len, a, b)| {
                MobilityModel::RandomWalk2D {
                    leg_len,
                    v_min: a.min(b),
                    v_max: a.max(b),
                }
            }),
            (0.0f64..3.0, 0.1f64..5.0, 0.0f64..5.0).prop_map(|(pause, a, b)| {
                MobilityModel::RandomWaypoint {
                    pause,
                    v_min: a,
                    v_max: a + b,
                }
            }),
            (0.0f64..=1.0, 0.5f64..5.0).prop_map(|(alpha, mean_speed)| MobilityModel::GaussMarkov {
                alpha,
                mean_speed,
                speed_sigma: 1.0,
                direction_sigma: 0.7,
                update_interval: 1.0,
            }),
        ]
    }

    proptest! {
        #[test]
        fn stays_in_square_and_within_speed_bounds(model in models(), seed in any::<u64>(), dt in 0.01f64..3.0) {
            let side = 20.0;
            let mut r = RngStream::new(seed, StreamId::Motion(3));
            let mut k = Kinematics::spawn(&model, side, &mut r);
            let (lo, hi) = model.speed_bounds();
            for _ in 0..200 {
                let before = k.speed;
                k = step_mobility(&model, &k, side, dt, &mut r);
                prop_assert!(k.position.x >= 0.0 && k.position.x <= side);
                prop_assert!(k.position.y >= 0.0 && k.position.y <= side);
                prop_assert!(k.speed >= lo - 1e-12 && k.speed <= hi + 1e-12, "speed {} not in [{lo}, {hi}] (was {before})", k.speed);
            }
        }

        #[test]
        fn reflection_conserves_speed(x in 0.0f64..10.0, y in 0.0f64..10.0, h in 0.0f64..TAU, dist in 0.0f64..35.0) {
            let mut k = at(x, y, h, 1.0);
            let (vx0, vy0) = (h.cos(), h.sin());
            reflect_move(&mut k, dist, 10.0);
            let (vx1, vy1) = (k.heading.cos(), k.heading.sin());
            prop_assert!(((vx1 * vx1 + vy1 * vy1) - (vx0 * vx0 + vy0 * vy0)).abs() < 1e-9);
            prop_assert!((vx1.abs() - vx0.abs()).abs() < 1e-9);
            prop_assert!((vy1.abs() - vy0.abs()).abs() < 1e-9);
            prop_assert_eq!(k.speed, 1.0);
        }
    }
}
