//! Agent state, motion model, and the simulated sensor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::model::{normalize_angle, Pose, SceneGraphSnapshot, SceneNode, SpatialEdge, Trajectory};
use crate::term::TemporalMemory;
use crate::tslc::SignatureStore;

use super::world::{Cell, GridWorld};

pub const FORWARD_STEP: f64 = 0.25;
pub const TURN_STEP: f64 = std::f64::consts::PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Stop,
}

/// Circular no-go region around a matched loop anchor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlacklistRegion {
    pub center: [f64; 2],
    pub radius: f64,
}

impl BlacklistRegion {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).powi(2) + (y - self.center[1]).powi(2) <= self.radius * self.radius
    }
}

/// What the agent believes about each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Belief {
    Unknown,
    Free,
    Blocked,
}

/// Explored/unknown/blocked map built from sensing.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyBelief {
    width: usize,
    height: usize,
    cells: Vec<Belief>,
}

impl OccupancyBelief {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![Belief::Unknown; width * height] }
    }

    pub fn get(&self, c: (usize, usize)) -> Belief {
        self.cells[c.1 * self.width + c.0]
    }

    pub fn set(&mut self, c: (usize, usize), b: Belief) {
        self.cells[c.1 * self.width + c.0] = b;
    }

    pub fn is_free(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get((x as usize, y as usize)) == Belief::Free
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Frontier cells: believed-free with at least one 4-neighbor unknown.
    pub fn frontiers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get((x, y)) != Belief::Free {
                    continue;
                }
                let unknown_neighbor = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|&(dx, dy)| {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        nx >= 0
                            && ny >= 0
                            && (nx as usize) < self.width
                            && (ny as usize) < self.height
                            && self.get((nx as usize, ny as usize)) == Belief::Unknown
                    });
                if unknown_neighbor {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Full per-episode agent state.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub pose: Pose,
    pub trajectory: Trajectory,
    pub memory: TemporalMemory,
    pub sig_store: SignatureStore,
    pub blacklist: Vec<BlacklistRegion>,
    pub occupancy_belief: OccupancyBelief,
    pub collisions: u64,
    pub stopped: bool,
    /// Meters traveled (sum of executed forward displacements).
    pub path_length: f64,
}

impl AgentState {
    pub fn new(world: &GridWorld) -> Result<Self> {
        let (x, y) = world.cell_center(world.start);
        let pose = Pose::new(x, y, world.start_heading)?;
        let mut trajectory = Trajectory::new();
        trajectory.append(0, pose)?;
        Ok(Self {
            pose,
            trajectory,
            memory: TemporalMemory::new(),
            sig_store: SignatureStore::new(),
            blacklist: Vec::new(),
            occupancy_belief: OccupancyBelief::new(world.width(), world.height()),
            collisions: 0,
            stopped: false,
            path_length: 0.0,
        })
    }
}

/// Applies one action. Forward moves 0.25 m along the heading unless the
/// destination cell is blocked (pose unchanged, collision counted); turns
/// rotate by 30 degrees; stop freezes the episode. The new pose is appended
/// to the trajectory at `timestep`.
pub fn step(world: &GridWorld, state: &mut AgentState, action: Action, timestep: u64) -> Result<()> {
    if state.stopped {
        return Ok(());
    }
    match action {
        Action::Forward => {
            let nx = state.pose.x + FORWARD_STEP * state.pose.theta.cos();
            let ny = state.pose.y + FORWARD_STEP * state.pose.theta.sin();
            match world.cell_of(nx, ny) {
                Some(c) if world.cell(c) == Cell::Free => {
                    state.pose = Pose::new(nx, ny, state.pose.theta)?;
                    state.path_length += FORWARD_STEP;
                }
                _ => {
                    state.collisions += 1;
                    // Learn from the bump so the planner routes around it.
                    if let Some(c) = world.cell_of(nx, ny) {
                        state.occupancy_belief.set(c, Belief::Blocked);
                    }
                }
            }
        }
        Action::TurnLeft => {
            state.pose =
                Pose::new(state.pose.x, state.pose.y, normalize_angle(state.pose.theta + TURN_STEP)?)?;
        }
        Action::TurnRight => {
            state.pose =
                Pose::new(state.pose.x, state.pose.y, normalize_angle(state.pose.theta - TURN_STEP)?)?;
        }
        Action::Stop => {
            state.stopped = true;
        }
    }
    state.trajectory.append(timestep, state.pose)?;
    Ok(())
}

/// Line of sight between two cells: every cell the segment crosses must be
/// free (endpoints excluded for the target so objects on cell borders stay
/// visible).
pub fn line_of_sight(world: &GridWorld, from: (usize, usize), to: (usize, usize)) -> bool {
    for (x, y) in bresenham(from, to) {
        if (x, y) == from || (x, y) == to {
            continue;
        }
        if world.cell((x, y)) == Cell::Blocked {
            return false;
        }
    }
    true
}

/// Classic integer line rasterization.
pub fn bresenham(from: (usize, usize), to: (usize, usize)) -> Vec<(usize, usize)> {
    let (mut x0, mut y0) = (from.0 as i64, from.1 as i64);
    let (x1, y1) = (to.0 as i64, to.1 as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cells = Vec::new();
    loop {
        cells.push((x0 as usize, y0 as usize));
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
    cells
}

/// Simulated perception: every object within range and field of view with
/// line of sight becomes a scene node, positions and features perturbed by
/// seeded Gaussian noise; co-visible objects closer than 2 m get a spatial
/// edge.
pub fn sense(
    world: &GridWorld,
    pose: &Pose,
    fov: f64,
    range: f64,
    sigma: f64,
    noise_seed: u64,
    timestep: u64,
) -> Result<SceneGraphSnapshot> {
    let agent_cell = world
        .cell_of(pose.x, pose.y)
        .ok_or_else(|| crate::error::Error::Validation("pose out of world bounds".into()))?;

    let mut nodes = Vec::new();
    let mut node_positions: Vec<(usize, [f64; 3])> = Vec::new();
    for (idx, obj) in world.objects.iter().enumerate() {
        let cell = obj.cell_at(timestep);
        let (ox, oy) = world.cell_center(cell);
        let dist = ((ox - pose.x).powi(2) + (oy - pose.y).powi(2)).sqrt();
        if dist > range {
            continue;
        }
        // Objects underfoot are always visible; otherwise check bearing.
        if dist > 1e-9 {
            let bearing = (oy - pose.y).atan2(ox - pose.x);
            let off = normalize_angle(bearing - pose.theta)?;
            if off.abs() > fov / 2.0 {
                continue;
            }
        }
        if !line_of_sight(world, agent_cell, cell) {
            continue;
        }

        // Per-object stream keyed by (seed, timestep, index) so visibility of
        // other objects never shifts the noise.
        let mut rng = ChaCha8Rng::seed_from_u64(
            noise_seed
                .wrapping_mul(0x9E3779B97F4A7C15)
                .wrapping_add(timestep.wrapping_mul(0x2545F4914F6CDD1D))
                .wrapping_add(idx as u64),
        );
        let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
        let mut draw = |base: f64| {
            if sigma > 0.0 {
                base + normal.sample(&mut rng)
            } else {
                base
            }
        };
        let position = [draw(ox), draw(oy), draw(0.0)];
        let features: Vec<f64> = obj.features.iter().map(|&f| draw(f)).collect();
        node_positions.push((nodes.len(), position));
        nodes.push(SceneNode::new(format!("obj{idx}"), position, features, obj.label.clone())?);
    }

    let mut edges = Vec::new();
    for i in 0..node_positions.len() {
        for j in (i + 1)..node_positions.len() {
            let (ia, pa) = &node_positions[i];
            let (ib, pb) = &node_positions[j];
            let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2))
                .sqrt();
            if d < 2.0 {
                edges.push(SpatialEdge::new(nodes[*ia].id.clone(), nodes[*ib].id.clone(), "near"));
            }
        }
    }
    SceneGraphSnapshot::new(timestep, nodes, edges)
}

/// Reveals cells visible from the pose: a fan of rays over the field of
/// view marks traversed cells free and the first blocked cell blocked.
pub fn update_belief(world: &GridWorld, pose: &Pose, fov: f64, range: f64, belief: &mut OccupancyBelief) {
    let Some(agent_cell) = world.cell_of(pose.x, pose.y) else {
        return;
    };
    belief.set(agent_cell, Belief::Free);

    let range_cells = (range / world.resolution).ceil() as i64;
    // Enough rays that every boundary cell of the fan is hit.
    let ray_count = ((fov * range_cells as f64 * 2.0).ceil() as usize).max(8);
    for k in 0..=ray_count {
        let angle = pose.theta - fov / 2.0 + fov * k as f64 / ray_count as f64;
        let tx = pose.x + range * angle.cos();
        let ty = pose.y + range * angle.sin();
        // Walk the ray in sub-cell increments.
        let steps = (range_cells * 3).max(1);
        for s in 1..=steps {
            let f = s as f64 / steps as f64;
            let (px, py) = (pose.x + (tx - pose.x) * f, pose.y + (ty - pose.y) * f);
            let Some(c) = world.cell_of(px, py) else {
                break;
            };
            if world.cell(c) == Cell::Blocked {
                belief.set(c, Belief::Blocked);
                break;
            }
            belief.set(c, Belief::Free);
        }
    }
}
