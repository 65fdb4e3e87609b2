use super::{step_mobility, Kinematics, MobilityModel, Point, RngStream, SimError, SpatialGrid, StreamId, WorldConfig};

/// Positions and motion state of every node, plus the per-slot spatial index.
#[derive(Debug)]
pub struct World {
    config: WorldConfig,
    model: MobilityModel,
    kinematics: Vec<Kinematics>,
    positions: Vec<Point>,
    motion_rngs: Vec<RngStream>,
    grid: SpatialGrid,
}

impl World {
    pub fn new(config: WorldConfig, model: MobilityModel, seed: u64) -> Result<Self, SimError> {
        model.validate()?;
        let mut placement = RngStream::new(seed, StreamId::Placement);
        let kinematics: Vec<Kinematics> = (0..config.n_nodes)
            .map(|_| Kinematics::spawn(&model, config.side, &mut placement))
            .collect();
        let positions: Vec<Point> = kinematics.iter().map(|k| k.position).collect();
        let motion_rngs = (0..config.n_nodes)
            .map(|i| RngStream::new(seed, StreamId::Motion(i as u32)))
            .collect();
        let grid = SpatialGrid::build(&positions, config.range, config.side);
        Ok(Self {
            config,
            model,
            kinematics,
            positions,
            motion_rngs,
            grid,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn model(&self) -> &MobilityModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn kinematics(&self) -> &[Kinematics] {
        &self.kinematics
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.grid.neighbors(&self.positions, i)
    }

    pub fn neighbors_into(&self, i: usize, out: &mut Vec<usize>) {
        self.grid.neighbors_into(&self.positions, i, out)
    }

    /// Moves every node by one slot and refreshes the spatial index.
    pub fn advance(&mut self) {
        let dt = self.config.slot_dt;
        let side = self.config.side;
        for ((k, p), rng) in self
            .kinematics
            .iter_mut()
            .zip(self.positions.iter_mut())
            .zip(self.motion_rngs.iter_mut())
        {
            *k = step_mobility(&self.model, k, side, dt, rng);
            *p = k.position;
        }
        self.grid.rebuild(&self.positions);
    }
}
