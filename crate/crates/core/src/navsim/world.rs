//! Occupancy-grid worlds: text format, validation, objects, shortest paths.

use std::collections::BinaryHeap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GoalSpec;

/// Descriptor dimensionality of synthetic object features.
pub const FEATURE_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Blocked,
}

/// A placed object: class label, synthetic descriptor, grid cell, and an
/// optional per-step waypoint script for moving objects.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldObject {
    pub label: String,
    pub features: Vec<f64>,
    pub cell: (usize, usize),
    /// Position schedule: at step t the object sits at `waypoints[min(t, len-1)]`.
    /// Empty means static at `cell`.
    pub waypoints: Vec<(usize, usize)>,
}

impl WorldObject {
    pub fn cell_at(&self, t: u64) -> (usize, usize) {
        if self.waypoints.is_empty() {
            self.cell
        } else {
            self.waypoints[(t as usize).min(self.waypoints.len() - 1)]
        }
    }
}

/// Deterministic unit-norm descriptor for a feature seed.
pub fn synth_features(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E3779B97F4A7C15));
    let mut f: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    for v in &mut f {
        *v /= norm;
    }
    f
}

/// Sidecar document accompanying a world grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSidecar {
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub start_heading: f64,
    pub goal: GoalEntry,
    #[serde(default, rename = "objects")]
    pub objects: Vec<ObjectEntry>,
}

fn default_resolution() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalEntry {
    pub label: String,
    pub feature_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub label: String,
    pub cell: [usize; 2],
    pub feature_seed: u64,
    #[serde(default)]
    pub waypoints: Vec<[usize; 2]>,
}

/// A validated world: grid, objects, start, and goal.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    pub name: String,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    pub resolution: f64,
    pub objects: Vec<WorldObject>,
    pub start: (usize, usize),
    pub start_heading: f64,
    pub goal: GoalSpec,
    pub goal_cell: (usize, usize),
}

impl GridWorld {
    /// Builds and validates a world from a grid string (`#` blocked, `.`
    /// free, `S` start, `G` goal) and sidecar data.
    pub fn build(
        name: impl Into<String>,
        grid_text: &str,
        sidecar: &WorldSidecar,
    ) -> Result<Self> {
        let rows: Vec<&str> = grid_text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Validation("world grid is empty".into()));
        }
        let height = rows.len();
        let width = rows[0].chars().count();
        let mut cells = vec![Cell::Blocked; width * height];
        let mut start = None;
        let mut goal_cell = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Validation(format!("world row {y} has ragged width")));
            }
            for (x, ch) in row.chars().enumerate() {
                let cell = match ch {
                    '#' => Cell::Blocked,
                    '.' => Cell::Free,
                    'S' => {
                        if start.replace((x, y)).is_some() {
                            return Err(Error::Validation("multiple start cells".into()));
                        }
                        Cell::Free
                    }
                    'G' => {
                        if goal_cell.replace((x, y)).is_some() {
                            return Err(Error::Validation("multiple goal cells".into()));
                        }
                        Cell::Free
                    }
                    other => {
                        return Err(Error::Validation(format!("unknown grid character {other:?}")))
                    }
                };
                cells[y * width + x] = cell;
            }
        }
        let start = start.ok_or_else(|| Error::Validation("world has no start cell".into()))?;
        let goal_cell =
            goal_cell.ok_or_else(|| Error::Validation("world has no goal cell".into()))?;

        if sidecar.resolution <= 0.0 {
            return Err(Error::Validation("resolution must be > 0".into()));
        }

        let mut objects = Vec::with_capacity(sidecar.objects.len() + 1);
        // The goal instance itself sits at the goal cell.
        objects.push(WorldObject {
            label: sidecar.goal.label.clone(),
            features: synth_features(sidecar.goal.feature_seed),
            cell: goal_cell,
            waypoints: Vec::new(),
        });
        for entry in &sidecar.objects {
            objects.push(WorldObject {
                label: entry.label.clone(),
                features: synth_features(entry.feature_seed),
                cell: (entry.cell[0], entry.cell[1]),
                waypoints: entry.waypoints.iter().map(|w| (w[0], w[1])).collect(),
            });
        }

        let goal = GoalSpec {
            label: sidecar.goal.label.clone(),
            features: synth_features(sidecar.goal.feature_seed),
            true_position: None, // filled below once resolution is known
        };

        let mut world = Self {
            name: name.into(),
            width,
            height,
            cells,
            resolution: sidecar.resolution,
            objects,
            start,
            start_heading: sidecar.start_heading,
            goal,
            goal_cell,
        };
        let gp = world.cell_center(goal_cell);
        world.goal.true_position = Some([gp.0, gp.1, 0.0]);
        world.validate()?;
        Ok(world)
    }

    fn validate(&self) -> Result<()> {
        if self.cell(self.start) != Cell::Free {
            return Err(Error::Validation("start cell is blocked".into()));
        }
        if self.cell(self.goal_cell) != Cell::Free {
            return Err(Error::Validation("goal cell is blocked".into()));
        }
        for obj in &self.objects {
            for &c in std::iter::once(&obj.cell).chain(&obj.waypoints) {
                if c.0 >= self.width || c.1 >= self.height || self.cell(c) != Cell::Free {
                    return Err(Error::Validation(format!(
                        "object {:?} placed on a blocked or out-of-bounds cell {:?}",
                        obj.label, c
                    )));
                }
            }
        }
        if self.shortest_path_len(self.start, self.goal_cell).is_none() {
            return Err(Error::Validation("no free path from start to goal".into()));
        }
        Ok(())
    }

    /// Loads `<stem>.map` with its `<stem>.toml` sidecar.
    pub fn load(map_path: &Path) -> Result<Self> {
        let grid_text = std::fs::read_to_string(map_path)?;
        let sidecar_path = map_path.with_extension("toml");
        let sidecar_text = std::fs::read_to_string(&sidecar_path)?;
        let sidecar: WorldSidecar = toml::from_str(&sidecar_text)
            .map_err(|e| Error::Parse(format!("world sidecar {}: {e}", sidecar_path.display())))?;
        let name = map_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "world".into());
        Self::build(name, &grid_text, &sidecar)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, c: (usize, usize)) -> Cell {
        self.cells[c.1 * self.width + c.0]
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_free(&self, x: i64, y: i64) -> bool {
        self.in_bounds(x, y) && self.cell((x as usize, y as usize)) == Cell::Free
    }

    /// Center of a cell in meters.
    pub fn cell_center(&self, c: (usize, usize)) -> (f64, f64) {
        (
            (c.0 as f64 + 0.5) * self.resolution,
            (c.1 as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing a metric position, when in bounds.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let cx = (x / self.resolution).floor() as usize;
        let cy = (y / self.resolution).floor() as usize;
        if cx < self.width && cy < self.height {
            Some((cx, cy))
        } else {
            None
        }
    }

    /// 8-connected shortest path length in meters on the true grid
    /// (diagonal steps cost sqrt(2) * resolution); `None` when unreachable.
    pub fn shortest_path_len(&self, from: (usize, usize), to: (usize, usize)) -> Option<f64> {
        octile_shortest_path(self.width, self.height, |x, y| self.is_free(x, y), from, to)
            .map(|d| d * self.resolution)
    }

    /// Grid text for this world (without sidecar).
    pub fn to_grid_text(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let ch = if (x, y) == self.start {
                    'S'
                } else if (x, y) == self.goal_cell {
                    'G'
                } else {
                    match self.cell((x, y)) {
                        Cell::Free => '.',
                        Cell::Blocked => '#',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

/// Dijkstra over the 8-connected grid in cell units (1 / sqrt(2) step
/// costs). Diagonal moves require both orthogonal neighbors free so paths
/// never cut corners.
pub fn octile_shortest_path(
    width: usize,
    height: usize,
    is_free: impl Fn(i64, i64) -> bool,
    from: (usize, usize),
    to: (usize, usize),
) -> Option<f64> {
    let dist = octile_distance_field(width, height, is_free, from);
    let d = dist[to.1 * width + to.0];
    if d.is_finite() {
        Some(d)
    } else {
        None
    }
}

/// Full distance field from a source cell, in cell units.
pub fn octile_distance_field(
    width: usize,
    height: usize,
    is_free: impl Fn(i64, i64) -> bool,
    from: (usize, usize),
) -> Vec<f64> {
    const SQRT2: f64 = std::f64::consts::SQRT_2;
    let mut dist = vec![f64::INFINITY; width * height];
    if !is_free(from.0 as i64, from.1 as i64) {
        return dist;
    }
    let idx = |x: usize, y: usize| y * width + x;
    dist[idx(from.0, from.1)] = 0.0;

    // Max-heap on reversed ordering; ties broken by cell index for
    // determinism.
    let mut heap: BinaryHeap<(std::cmp::Reverse<OrderedF64>, usize, usize)> = BinaryHeap::new();
    heap.push((std::cmp::Reverse(OrderedF64(0.0)), from.0, from.1));
    while let Some((std::cmp::Reverse(OrderedF64(d)), x, y)) = heap.pop() {
        if d > dist[idx(x, y)] {
            continue;
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if !is_free(nx, ny) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && !(is_free(x as i64 + dx, y as i64) && is_free(x as i64, y as i64 + dy)) {
                    continue;
                }
                let step = if diagonal { SQRT2 } else { 1.0 };
                let nd = d + step;
                let ni = idx(nx as usize, ny as usize);
                if nd < dist[ni] {
                    dist[ni] = nd;
                    heap.push((std::cmp::Reverse(OrderedF64(nd)), nx as usize, ny as usize));
                }
            }
        }
    }
    dist
}

/// Total order wrapper for finite path costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedF64(pub f64);

impl Eq for OrderedF64 {}

impl PartialOrd for OrderedF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
