//! Slotted discrete-time world: deployment geometry, node motion, unit-disk
//! connectivity and the shared broadcast channel.

mod channel;
mod mobility;
mod rng;
mod spatial;
mod world;

pub use channel::{Delivery, SlottedChannel};
pub use mobility::{step_mobility, Kinematics, MobilityModel, MotionPhase};
pub use rng::{RngStream, StreamId};
pub use spatial::{neighbors, SpatialGrid};
pub use world::World;

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> SimError {
    SimError::InvalidParameter {
        name,
        value,
        reason,
    }
}

/// A point in the deployment square.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Deployment geometry. The square side is chosen so that a disk of radius
/// `range` holds `density` nodes on average, whatever the network size.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub n_nodes: usize,
    pub density: f64,
    pub range: f64,
    pub side: f64,
    pub loss_prob: f64,
    pub slot_dt: f64,
}

/// Default slot length in seconds; five slots make one 250 ms transaction.
pub const DEFAULT_SLOT_DT: f64 = 0.05;

impl WorldConfig {
    pub fn derive(
        n_nodes: usize,
        density: f64,
        range: f64,
        loss_prob: f64,
        slot_dt: f64,
    ) -> Result<Self, SimError> {
        if n_nodes == 0 {
            return Err(invalid("n_nodes", 0.0, "must be at least 1"));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(invalid("density", density, "must be positive"));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(invalid("range", range, "must be positive"));
        }
        if !(0.0..1.0).contains(&loss_prob) {
            return Err(invalid("loss_prob", loss_prob, "must lie in [0, 1)"));
        }
        if !(slot_dt > 0.0) || !slot_dt.is_finite() {
            return Err(invalid("slot_dt", slot_dt, "must be positive"));
        }
        let side = (n_nodes as f64 * PI * range * range / density).sqrt();
        Ok(Self {
            n_nodes,
            density,
            range,
            side,
            loss_prob,
            slot_dt,
        })
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Point density (nodes per unit area).
    pub fn node_density(&self) -> f64 {
        self.n_nodes as f64 / self.area()
    }
}
