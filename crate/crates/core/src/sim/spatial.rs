use super::Point;

/// Brute-force unit-disk neighbourhood: every `j != i` within distance `range`
/// (boundary inclusive).
pub fn neighbors(positions: &[Point], range: f64, i: usize) -> Vec<usize> {
    let r2 = range * range;
    let p = positions[i];
    positions
        .iter()
        .enumerate()
        .filter(|&(j, q)| j != i && p.dist_sq(*q) <= r2)
        .map(|(j, _)| j)
        .collect()
}

/// Uniform bucket grid with cell size equal to the radio range, rebuilt once
/// per slot. Neighbour queries only scan the 3x3 block around a node's cell.
#[derive(Clone, Debug, Default)]
pub struct SpatialGrid {
    cell: f64,
    cols: usize,
    range: f64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialGrid {
    pub fn build(positions: &[Point], range: f64, side: f64) -> Self {
        let cols = ((side / range).floor() as usize).max(1);
        let cell = side / cols as f64;
        let mut grid = Self {
            cell,
            cols,
            range,
            starts: vec![0; cols * cols + 1],
            items: vec![0; positions.len()],
        };
        grid.rebuild(positions);
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let cx = ((p.x / self.cell) as usize).min(self.cols - 1);
        let cy = ((p.y / self.cell) as usize).min(self.cols - 1);
        (cx, cy)
    }

    pub fn rebuild(&mut self, positions: &[Point]) {
        let ncells = self.cols * self.cols;
        self.starts.clear();
        self.starts.resize(ncells + 1, 0);
        self.items.resize(positions.len(), 0);
        for &p in positions {
            let (cx, cy) = self.cell_of(p);
            self.starts[cy * self.cols + cx + 1] += 1;
        }
        for c in 0..ncells {
            self.starts[c + 1] += self.starts[c];
        }
        let mut fill = self.starts.clone();
        for (i, &p) in positions.iter().enumerate() {
            let (cx, cy) = self.cell_of(p);
            let slot = &mut fill[cy * self.cols + cx];
            self.items[*slot as usize] = i as u32;
            *slot += 1;
        }
    }

    /// Appends the neighbours of node `i` to `out` in ascending index order.
    pub fn neighbors_into(&self, positions: &[Point], i: usize, out: &mut Vec<usize>) {
        let start = out.len();
        let p = positions[i];
        let r2 = self.range * self.range;
        let (cx, cy) = self.cell_of(p);
        let x0 = cx.saturating_sub(1);
        let x1 = (cx + 1).min(self.cols - 1);
        let y0 = cy.saturating_sub(1);
        let y1 = (cy + 1).min(self.cols - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = y * self.cols + x;
                for &j in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let j = j as usize;
                    if j != i && p.dist_sq(positions[j]) <= r2 {
                        out.push(j);
                    }
                }
            }
        }
        out[start..].sort_unstable();
    }

    pub fn neighbors(&self, positions: &[Point], i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.neighbors_into(positions, i, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_range_is_connected() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert_eq!(neighbors(&pts, 1.0, 0), vec![1]);
        assert_eq!(neighbors(&pts, 1.0, 1), vec![0]);
    }

    #[test]
    fn single_node_has_no_neighbors() {
        let pts = [Point::new(0.3, 0.3)];
        assert!(neighbors(&pts, 1.0, 0).is_empty());
        let grid = SpatialGrid::build(&pts, 1.0, 1.0);
        assert!(grid.neighbors(&pts, 0).is_empty());
    }

    #[test]
    fn collinear_chain() {
        let pts = [Point::new(1.0, 1.0), Point::new(1.6, 1.0), Point::new(2.2, 1.0)];
        assert_eq!(neighbors(&pts, 1.0, 0).len(), 1);
        assert_eq!(neighbors(&pts, 1.0, 1).len(), 2);
        assert_eq!(neighbors(&pts, 1.0, 2).len(), 1);
    }

    proptest! {
        #[test]
        fn grid_matches_brute_force(
            raw in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..120),
            range in 0.3f64..3.0,
        ) {
            let pts: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let grid = SpatialGrid::build(&pts, range, 10.0);
            for i in 0..pts.len() {
                let brute = neighbors(&pts, range, i);
                prop_assert_eq!(grid.neighbors(&pts, i), brute.clone());
                for j in brute {
                    prop_assert!(neighbors(&pts, range, j).contains(&i));
                }
            }
        }
    }
}
