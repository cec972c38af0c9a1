//! Episode loop: sense, remember, check for loops, pick frontiers, step,
//! and score the run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_angle, Config, GoalSpec};
use crate::tslc::{cadence_gate, check_loop};

use super::agent::{sense, step, update_belief, Action, AgentState, Belief, BlacklistRegion, TURN_STEP};
use super::world::{octile_distance_field, GridWorld};

/// Which modules an episode runs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    Full,
    NoTerm,
    NoTslc,
    Baseline,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::NoTerm, Ablation::NoTslc, Ablation::Baseline];

    pub fn uses_term(&self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoTslc)
    }

    pub fn uses_tslc(&self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoTerm)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoTerm => "no-term",
            Ablation::NoTslc => "no-tslc",
            Ablation::Baseline => "baseline",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "full" => Ok(Ablation::Full),
            "no-term" => Ok(Ablation::NoTerm),
            "no-tslc" => Ok(Ablation::NoTslc),
            "baseline" => Ok(Ablation::Baseline),
            other => Err(Error::Validation(format!(
                "unknown ablation {other:?} (expected full|no-term|no-tslc|baseline)"
            ))),
        }
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// 1 when the final pose lies within the success radius of the goal.
    pub success: u8,
    /// Meters actually traveled.
    pub path_length: f64,
    /// Shortest-path meters from start to goal on the true grid.
    pub shortest_length: f64,
    pub steps: u64,
    pub loop_detections: u64,
    pub revisited_cells: u64,
}

/// Cosine similarity of two descriptor vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Picks the next exploration target among frontier cells outside every
/// blacklisted region, minimizing believed path cost minus a bias toward
/// the predicted positions of goal-labeled instances. Falls back to
/// blacklisted frontiers when nothing else remains; `None` once the map has
/// no frontiers at all.
pub fn select_frontier(
    world: &GridWorld,
    state: &AgentState,
    goal: &GoalSpec,
    cfg: &Config,
) -> Option<(usize, usize)> {
    let frontiers = state.occupancy_belief.frontiers();
    if frontiers.is_empty() {
        return None;
    }
    let agent_cell = world.cell_of(state.pose.x, state.pose.y)?;
    let belief = &state.occupancy_belief;
    let field = octile_distance_field(
        belief.width(),
        belief.height(),
        |x, y| belief.is_free(x, y),
        agent_cell,
    );

    // Predicted goal-instance positions from temporal memory, if any.
    let predictions: Vec<[f64; 3]> = state
        .memory
        .newest()
        .map(|snap| {
            snap.nodes
                .iter()
                .filter(|n| n.label == goal.label)
                .map(|n| state.memory.predict_position(n, cfg.predict_horizon))
                .collect()
        })
        .unwrap_or_default();

    let score = |cell: (usize, usize)| -> Option<f64> {
        let d = field[cell.1 * belief.width() + cell.0];
        if !d.is_finite() {
            return None;
        }
        let (cx, cy) = world.cell_center(cell);
        let bias = predictions
            .iter()
            .map(|p| {
                let dist = ((cx - p[0]).powi(2) + (cy - p[1]).powi(2)).sqrt();
                cfg.goal_bias_weight * (-dist / cfg.goal_bias_scale).exp()
            })
            .fold(0.0, f64::max);
        Some(d * world.resolution - bias)
    };

    let pick_best = |candidates: &[(usize, usize)]| -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for &cell in candidates {
            let Some(s) = score(cell) else { continue };
            // Strict < keeps the first (row-major) cell on ties.
            if best.map_or(true, |(_, bs)| s < bs) {
                best = Some((cell, s));
            }
        }
        best.map(|(c, _)| c)
    };

    let allowed: Vec<(usize, usize)> = frontiers
        .iter()
        .copied()
        .filter(|&c| {
            let (cx, cy) = world.cell_center(c);
            !state.blacklist.iter().any(|r| r.contains(cx, cy))
        })
        .collect();
    // When every frontier is blacklisted, ignore the blacklist rather than
    // stall the episode.
    pick_best(&allowed).or_else(|| pick_best(&frontiers))
}

/// One steering decision toward a metric target: descend the believed
/// distance field to the adjacent cell closest to the target, then turn or
/// advance toward that cell's center.
fn navigate_toward(
    world: &GridWorld,
    state: &AgentState,
    target_cell: (usize, usize),
) -> Option<Action> {
    let agent_cell = world.cell_of(state.pose.x, state.pose.y)?;
    let belief = &state.occupancy_belief;
    let traversable =
        |x: i64, y: i64| belief.is_free(x, y) || (x, y) == (target_cell.0 as i64, target_cell.1 as i64);
    let field = octile_distance_field(belief.width(), belief.height(), traversable, target_cell);
    let own = field[agent_cell.1 * belief.width() + agent_cell.0];
    if !own.is_finite() {
        return None;
    }
    if agent_cell == target_cell {
        // Head for the cell center.
        return steer(state, world.cell_center(target_cell));
    }

    let mut next: Option<((usize, usize), f64)> = None;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (agent_cell.0 as i64 + dx, agent_cell.1 as i64 + dy);
            if !traversable(nx, ny) {
                continue;
            }
            if dx != 0 && dy != 0 {
                let ok = traversable(agent_cell.0 as i64 + dx, agent_cell.1 as i64)
                    && traversable(agent_cell.0 as i64, agent_cell.1 as i64 + dy);
                if !ok {
                    continue;
                }
            }
            let d = field[ny as usize * belief.width() + nx as usize];
            if !d.is_finite() {
                continue;
            }
            if next.map_or(true, |(_, bd)| d < bd) {
                next = Some(((nx as usize, ny as usize), d));
            }
        }
    }
    steer(state, world.cell_center(next?.0))
}

/// Turn toward the waypoint when misaligned, otherwise go forward.
fn steer(state: &AgentState, waypoint: (f64, f64)) -> Option<Action> {
    let desired = (waypoint.1 - state.pose.y).atan2(waypoint.0 - state.pose.x);
    let diff = normalize_angle(desired - state.pose.theta).ok()?;
    if diff.abs() <= TURN_STEP / 2.0 + 1e-9 {
        Some(Action::Forward)
    } else if diff > 0.0 {
        Some(Action::TurnLeft)
    } else {
        Some(Action::TurnRight)
    }
}

/// Step-by-step episode record for plotting and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub trajectory: crate::model::Trajectory,
    pub blacklist: Vec<BlacklistRegion>,
    /// Blacklist size after each step, for monotonicity checks.
    pub blacklist_len_per_step: Vec<usize>,
}

/// Runs one full episode and scores it.
///
/// Per step: sense; push the snapshot into temporal memory (unless ablated);
/// on cadence steps run the loop check (unless ablated) and blacklist a
/// circle around the matched anchor on detection; head for a matched goal
/// instance or the selected frontier; stop on arrival, exhaustion, or
/// budget.
pub fn run_episode(
    world: &GridWorld,
    cfg: &Config,
    seed: u64,
    ablation: Ablation,
) -> Result<EpisodeResult> {
    run_episode_traced(world, cfg, seed, ablation).map(|(result, _)| result)
}

/// `run_episode` variant that also returns the executed trace.
pub fn run_episode_traced(
    world: &GridWorld,
    cfg: &Config,
    seed: u64,
    ablation: Ablation,
) -> Result<(EpisodeResult, EpisodeTrace)> {
    let mut state = AgentState::new(world)?;
    let goal = world.goal.clone();
    let goal_true = goal.true_position.expect("worlds carry goal ground truth");

    let shortest_length = world
        .shortest_path_len(world.start, world.goal_cell)
        .ok_or_else(|| Error::Validation("world has no start-goal path".into()))?;

    let mut loop_detections: u64 = 0;
    let mut revisited_cells: u64 = 0;
    let mut visited = std::collections::HashSet::new();
    let mut last_cell = world.cell_of(state.pose.x, state.pose.y).expect("start in bounds");
    visited.insert(last_cell);

    let mut goal_target: Option<(f64, f64)> = None;
    let mut frontier_target: Option<(usize, usize)> = None;
    // Arrival tolerance for the matched goal instance.
    let stop_radius = 0.15;

    let mut steps: u64 = 0;
    let mut blacklist_len_per_step = Vec::new();
    for t in 0..cfg.step_budget {
        update_belief(world, &state.pose, cfg.sensor_fov, cfg.sensor_range, &mut state.occupancy_belief);
        let snapshot = sense(
            world,
            &state.pose,
            cfg.sensor_fov,
            cfg.sensor_range,
            cfg.sensor_sigma,
            seed,
            t,
        )?;

        // Goal instance match on the current snapshot.
        for node in &snapshot.nodes {
            if node.label == goal.label
                && cosine_similarity(&node.features, &goal.features) > cfg.goal_cos_threshold
            {
                goal_target = Some((node.position[0], node.position[1]));
            }
        }

        if ablation.uses_term() {
            state.memory.push_snapshot(snapshot, cfg)?;
        }

        if ablation.uses_tslc() && cadence_gate(t, cfg) {
            let det = check_loop(&mut state.sig_store, &state.trajectory, cfg)?;
            if det.detected {
                loop_detections += 1;
                let anchor = state.sig_store.entries()[det.matched_index.expect("detected")].anchor;
                state.blacklist.push(BlacklistRegion {
                    center: anchor,
                    radius: cfg.blacklist_radius,
                });
            }
        }

        // Decide the action: approach a matched goal instance when one is
        // reachable, otherwise explore frontiers.
        let mut action = None;
        if let Some((gx, gy)) = goal_target {
            let dist = ((state.pose.x - gx).powi(2) + (state.pose.y - gy).powi(2)).sqrt();
            if dist <= stop_radius {
                action = Some(Action::Stop);
            } else if let Some(cell) = world.cell_of(gx, gy) {
                // Unreachable under the current belief: keep exploring and
                // retry as the map grows.
                action = navigate_toward(world, &state, cell);
            }
        }
        let action = action.unwrap_or_else(|| {
            // Re-select the frontier when none is held or it became invalid.
            let invalid = match frontier_target {
                None => true,
                Some(cell) => {
                    let still_frontier = state.occupancy_belief.frontiers().contains(&cell);
                    let (cx, cy) = world.cell_center(cell);
                    let blacklisted = state.blacklist.iter().any(|r| r.contains(cx, cy));
                    !still_frontier || blacklisted
                }
            };
            if invalid {
                frontier_target = select_frontier(world, &state, &goal, cfg);
            }
            match frontier_target {
                Some(cell) => match navigate_toward(world, &state, cell) {
                    Some(a) => a,
                    None => {
                        // Unreachable under current belief; drop and retry
                        // next step.
                        frontier_target = None;
                        Action::TurnLeft
                    }
                },
                None => Action::Stop,
            }
        });

        step(world, &mut state, action, t + 1)?;
        steps = t + 1;
        blacklist_len_per_step.push(state.blacklist.len());
        if let Some(cell) = world.cell_of(state.pose.x, state.pose.y) {
            if cell != last_cell {
                if !visited.insert(cell) {
                    revisited_cells += 1;
                }
                last_cell = cell;
            }
        }
        if state.stopped {
            break;
        }
    }

    let success = {
        let dx = state.pose.x - goal_true[0];
        let dy = state.pose.y - goal_true[1];
        u8::from((dx * dx + dy * dy).sqrt() <= cfg.success_radius)
    };

    let result = EpisodeResult {
        success,
        path_length: state.path_length,
        shortest_length,
        steps,
        loop_detections,
        revisited_cells,
    };
    let trace = EpisodeTrace {
        trajectory: state.trajectory,
        blacklist: state.blacklist,
        blacklist_len_per_step,
    };
    Ok((result, trace))
}

/// Aggregates success rate and success-weighted path length, both in
/// percent. SPL weights each success by `l / max(p, l)` so longer-than-
/// optimal paths score lower.
pub fn compute_metrics(results: &[EpisodeResult]) -> Result<(f64, f64)> {
    if results.is_empty() {
        return Err(Error::Validation("cannot compute metrics of zero episodes".into()));
    }
    let n = results.len() as f64;
    let mut sr = 0.0;
    let mut spl = 0.0;
    for r in results {
        if r.shortest_length <= 0.0 {
            return Err(Error::Validation("shortest_length must be > 0".into()));
        }
        if r.success == 1 {
            sr += 1.0;
            spl += r.shortest_length / r.path_length.max(r.shortest_length);
        }
    }
    Ok((100.0 * sr / n, 100.0 * spl / n))
}
