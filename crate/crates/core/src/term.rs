//! Temporal reasoning memory: a sliding window of scene-graph snapshots with
//! decayed cross-temporal edges, per-label velocity estimates, and history
//! queries.
//!
//! Nodes in consecutive snapshots are linked when their fused
//! semantic/spatial similarity clears a threshold; each link carries an
//! appearance-decayed weight and the timestep gap, which also drive the
//! velocity estimates used for position prediction.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{Config, SceneGraphSnapshot, SceneNode};

/// Link between a node in one snapshot and a node in the next retained one.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEdge {
    /// (timestep, node id) in the older snapshot.
    pub from_node: (u64, String),
    /// (timestep, node id) in the newer snapshot.
    pub to_node: (u64, String),
    /// gamma * exp(-lambda * |feature distance|), in (0, gamma].
    pub weight: f64,
    /// Timestep gap between the two snapshots.
    pub dt: u64,
}

/// Fused semantic/spatial similarity of two nodes, in [0, 1].
///
/// `alpha_sim` weights exact label agreement against a Gaussian-style decay
/// of the positional gap with scale `sigma_p`.
pub fn similarity(a: &SceneNode, b: &SceneNode, alpha_sim: f64, sigma_p: f64) -> Result<f64> {
    if sigma_p <= 0.0 {
        return Err(Error::Validation(format!("sigma_p must be > 0, got {sigma_p}")));
    }
    let semantic = if a.label == b.label { 1.0 } else { 0.0 };
    let dist = dist3(&a.position, &b.position);
    Ok(alpha_sim * semantic + (1.0 - alpha_sim) * (-dist / sigma_p).exp())
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn feature_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Sliding window of snapshots with cross-temporal edges and velocities.
///
/// Single-writer: `push_snapshot` is the only mutating operation.
#[derive(Debug, Clone, Default)]
pub struct TemporalMemory {
    window: VecDeque<SceneGraphSnapshot>,
    temporal_edges: Vec<TemporalEdge>,
    velocities: BTreeMap<String, [f64; 3]>,
    feature_dim: Option<usize>,
}

impl TemporalMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn window(&self) -> impl Iterator<Item = &SceneGraphSnapshot> {
        self.window.iter()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn temporal_edges(&self) -> &[TemporalEdge] {
        &self.temporal_edges
    }

    pub fn velocities(&self) -> &BTreeMap<String, [f64; 3]> {
        &self.velocities
    }

    pub fn newest(&self) -> Option<&SceneGraphSnapshot> {
        self.window.back()
    }

    /// Ingests the next snapshot: links it to the previous newest one,
    /// refreshes velocities, and evicts beyond the window capacity.
    ///
    /// Returns the number of temporal edges created.
    pub fn push_snapshot(&mut self, g: SceneGraphSnapshot, cfg: &Config) -> Result<usize> {
        if let Some(prev) = self.window.back() {
            if g.timestep <= prev.timestep {
                return Err(Error::Ordering(format!(
                    "snapshot timestep {} not after {}",
                    g.timestep, prev.timestep
                )));
            }
        }
        for n in &g.nodes {
            match self.feature_dim {
                None => self.feature_dim = Some(n.features.len()),
                Some(d) if n.features.len() != d => {
                    return Err(Error::Validation(format!(
                        "feature dimensionality changed from {d} to {}",
                        n.features.len()
                    )))
                }
                _ => {}
            }
        }

        let mut created = 0;
        if let Some(prev) = self.window.back() {
            let dt = g.timestep - prev.timestep;
            for v in &prev.nodes {
                for u in &g.nodes {
                    if similarity(v, u, cfg.alpha_sim, cfg.sigma_p)? > cfg.tau {
                        let delta = feature_distance(&v.features, &u.features);
                        self.temporal_edges.push(TemporalEdge {
                            from_node: (prev.timestep, v.id.clone()),
                            to_node: (g.timestep, u.id.clone()),
                            weight: cfg.gamma * (-cfg.lambda * delta).exp(),
                            dt,
                        });
                        created += 1;
                    }
                }
            }
        }

        self.window.push_back(g);
        while self.window.len() > cfg.k {
            let evicted = self.window.pop_front().expect("nonempty window");
            self.temporal_edges.retain(|e| e.from_node.0 != evicted.timestep);
        }

        // Refresh velocity estimates for labels in the new snapshot.
        let labels: Vec<String> = {
            let newest = self.window.back().expect("just pushed");
            newest.nodes.iter().map(|n| n.label.clone()).collect()
        };
        for label in labels {
            if let Some(v) = self.estimate_velocity(&label) {
                self.velocities.insert(label, v);
            }
        }
        Ok(created)
    }

    /// Discrete temporal derivative of position for a label, from the two
    /// newest snapshots. Requires a temporal edge linking same-label nodes;
    /// ties resolved by highest edge weight, then lowest node id.
    pub fn estimate_velocity(&self, label: &str) -> Option<[f64; 3]> {
        if self.window.len() < 2 {
            return None;
        }
        let newest = &self.window[self.window.len() - 1];
        let prev = &self.window[self.window.len() - 2];

        let mut best: Option<(&TemporalEdge, &SceneNode, &SceneNode)> = None;
        for e in &self.temporal_edges {
            if e.from_node.0 != prev.timestep || e.to_node.0 != newest.timestep {
                continue;
            }
            let (Some(v), Some(u)) = (prev.node(&e.from_node.1), newest.node(&e.to_node.1)) else {
                continue;
            };
            if v.label != label || u.label != label {
                continue;
            }
            let better = match best {
                None => true,
                Some((be, bv, bu)) => {
                    e.weight > be.weight
                        || (e.weight == be.weight && (&u.id, &v.id) < (&bu.id, &bv.id))
                }
            };
            if better {
                best = Some((e, v, u));
            }
        }
        best.map(|(e, v, u)| {
            let dt = e.dt as f64;
            [
                (u.position[0] - v.position[0]) / dt,
                (u.position[1] - v.position[1]) / dt,
                (u.position[2] - v.position[2]) / dt,
            ]
        })
    }

    /// Linear extrapolation `p + k*v` using the recorded velocity for the
    /// node's label; nodes without one hold their current position.
    pub fn predict_position(&self, node: &SceneNode, k: u64) -> [f64; 3] {
        match self.velocities.get(&node.label) {
            Some(v) => {
                let kf = k as f64;
                [
                    node.position[0] + kf * v[0],
                    node.position[1] + kf * v[1],
                    node.position[2] + kf * v[2],
                ]
            }
            None => node.position,
        }
    }

    /// All (timestep, position) observations of a label in retained
    /// snapshots within `[window.0, window.1]`, timestep-ascending; nodes at
    /// one timestep ordered by id.
    pub fn query_history(&self, label: &str, window: (u64, u64)) -> Vec<(u64, [f64; 3])> {
        let (lo, hi) = window;
        let mut out = Vec::new();
        for snap in &self.window {
            if snap.timestep < lo || snap.timestep > hi {
                continue;
            }
            let mut at_t: Vec<&SceneNode> =
                snap.nodes.iter().filter(|n| n.label == label).collect();
            at_t.sort_by(|a, b| a.id.cmp(&b.id));
            out.extend(at_t.into_iter().map(|n| (snap.timestep, n.position)));
        }
        out
    }
}
