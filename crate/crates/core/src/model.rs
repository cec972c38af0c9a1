//! Shared domain types: poses, trajectories, scene graphs, goals, and the
//! run configuration.
//!
//! Everything here is immutable after construction and safe to move or share
//! across threads.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle to the canonical interval `[-pi, pi)`.
///
/// Rejects non-finite input.
pub fn normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::Validation(format!("angle must be finite, got {theta}")));
    }
    let two_pi = 2.0 * PI;
    let mut a = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can land exactly on +pi through rounding.
    if a >= PI {
        a -= two_pi;
    }
    Ok(a)
}

/// Agent state on the plane: 2D position in meters plus heading.
///
/// The heading is normalized to `[-pi, pi)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Validation(format!(
                "pose coordinates must be finite, got ({x}, {y})"
            )));
        }
        Ok(Self { x, y, theta: normalize_angle(theta)? })
    }

    /// Euclidean distance between the 2D positions of two poses.
    pub fn distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Timestamped pose sequence. Append-only; timesteps strictly increase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<(u64, Pose)>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self { points: Vec::new() }
    }

    pub fn append(&mut self, timestep: u64, pose: Pose) -> Result<()> {
        if let Some(&(last, _)) = self.points.last() {
            if timestep <= last {
                return Err(Error::Ordering(format!(
                    "trajectory timestep {timestep} not after {last}"
                )));
            }
        }
        self.points.push((timestep, pose));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(u64, Pose)] {
        &self.points
    }

    pub fn last(&self) -> Option<&(u64, Pose)> {
        self.points.last()
    }

    /// The most recent `n` points (all of them when shorter).
    pub fn tail(&self, n: usize) -> &[(u64, Pose)] {
        let start = self.points.len().saturating_sub(n);
        &self.points[start..]
    }

    /// Parses the line format `t,x,y,theta` (decimal text, one record per
    /// line, optional header).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut traj = Trajectory::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if lineno == 0 && fields.first() == Some(&"t") {
                continue; // header
            }
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "trajectory line {}: expected t,x,y,theta, got {:?}",
                    lineno + 1,
                    line
                )));
            }
            let t: u64 = fields[0].parse().map_err(|_| {
                Error::Parse(format!("trajectory line {}: bad timestep {:?}", lineno + 1, fields[0]))
            })?;
            let mut vals = [0.0f64; 3];
            for (i, f) in fields[1..].iter().enumerate() {
                vals[i] = f.parse().map_err(|_| {
                    Error::Parse(format!("trajectory line {}: bad number {f:?}", lineno + 1))
                })?;
            }
            traj.append(t, Pose::new(vals[0], vals[1], vals[2])?)?;
        }
        Ok(traj)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,theta\n");
        for (t, p) in &self.points {
            out.push_str(&format!("{},{},{},{}\n", t, p.x, p.y, p.theta));
        }
        out
    }
}

/// A detected object instance: 3D position, descriptor vector, class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: String,
    pub position: [f64; 3],
    pub features: Vec<f64>,
    pub label: String,
}

impl SceneNode {
    pub fn new(
        id: impl Into<String>,
        position: [f64; 3],
        features: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("scene node position must be finite".into()));
        }
        if features.is_empty() {
            return Err(Error::Validation("scene node features must have d >= 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("scene node features must be finite".into()));
        }
        Ok(Self { id: id.into(), position, features, label: label.into() })
    }
}

/// Unordered edge between two co-observed nodes, carrying a relation label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialEdge {
    pub a: String,
    pub b: String,
    pub relation: String,
}

impl SpatialEdge {
    /// Canonicalizes endpoint order so the pair is unordered.
    pub fn new(a: impl Into<String>, b: impl Into<String>, relation: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Self { a, b, relation: relation.into() }
    }
}

/// One timestamped scene graph: detected objects plus spatial relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraphSnapshot {
    pub timestep: u64,
    pub nodes: Vec<SceneNode>,
    pub spatial_edges: Vec<SpatialEdge>,
}

impl SceneGraphSnapshot {
    pub fn new(
        timestep: u64,
        nodes: Vec<SceneNode>,
        spatial_edges: Vec<SpatialEdge>,
    ) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(Error::Validation(format!("duplicate node id {:?}", n.id)));
            }
        }
        for e in &spatial_edges {
            if !seen.contains(e.a.as_str()) || !seen.contains(e.b.as_str()) {
                return Err(Error::Validation(format!(
                    "edge ({:?}, {:?}) references a missing node",
                    e.a, e.b
                )));
            }
        }
        Ok(Self { timestep, nodes, spatial_edges })
    }

    pub fn node(&self, id: &str) -> Option<&SceneNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Ingestion format: one JSON document per snapshot.
    pub fn from_json(text: &str) -> Result<Self> {
        let snap: SceneGraphSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("snapshot: {e}")))?;
        // Re-validate through the constructor.
        SceneGraphSnapshot::new(snap.timestep, snap.nodes, snap.spatial_edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

/// Navigation goal: a target instance named by class label and descriptor.
///
/// `true_position` is simulator ground truth; the agent never reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub label: String,
    pub features: Vec<f64>,
    pub true_position: Option<[f64; 3]>,
}

/// All tunable parameters. Field names are the config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Temporal memory window size (snapshots retained).
    #[serde(rename = "K")]
    pub k: usize,
    /// Temporal decay factor in (0,1).
    pub gamma: f64,
    /// Appearance decay rate for temporal edge weights.
    pub lambda: f64,
    /// Minimum similarity for temporal edge formation.
    pub tau: f64,
    /// Semantic-vs-spatial weight in instance similarity.
    pub alpha_sim: f64,
    /// Spatial decay scale (meters) in instance similarity.
    pub sigma_p: f64,
    /// Orientation weight in the trajectory embedding.
    pub r: f64,
    /// Maximum filtration scale (meters).
    pub eps_max: f64,
    /// Persistence threshold for diagram filtering.
    pub tau_p: f64,
    /// Loop-closure distance threshold.
    pub theta_w: f64,
    /// Visual-feature weight in the enhanced embedding.
    pub alpha_vis: f64,
    /// Spatial gate radius (meters) for signature search.
    #[serde(rename = "R_search")]
    pub r_search: f64,
    /// Signature computation interval (steps).
    pub cadence: u64,
    /// Minimum trajectory length for signature computation.
    pub min_traj_len: usize,

    // Extension knobs (not part of the core parameter set above).
    /// Weight of the Wasserstein term in the combined signature distance.
    pub w_wasserstein: f64,
    /// Weight of the landscape term in the combined signature distance.
    pub w_landscape: f64,
    /// Trajectory points per signature segment.
    pub segment_window: usize,
    /// Landscape discretization grid size.
    pub grid_count: usize,
    /// Simulated sensor field of view (radians).
    pub sensor_fov: f64,
    /// Simulated sensor range (meters).
    pub sensor_range: f64,
    /// Simulated sensor noise standard deviation (meters).
    pub sensor_sigma: f64,
    /// Cosine similarity threshold for goal instance matching.
    pub goal_cos_threshold: f64,
    /// Radius (meters) of the circular region blacklisted per detection.
    pub blacklist_radius: f64,
    /// Episode success radius (meters).
    pub success_radius: f64,
    /// Episode step budget.
    pub step_budget: u64,
    /// Frontier scoring: weight of the goal-prediction bias term.
    pub goal_bias_weight: f64,
    /// Frontier scoring: length scale (meters) of the goal-prediction bias.
    pub goal_bias_scale: f64,
    /// Lookahead (steps) when predicting goal instance positions.
    pub predict_horizon: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            k: 100,
            gamma: 0.95,
            lambda: 1.0,
            tau: 0.5,
            alpha_sim: 0.5,
            sigma_p: 1.0,
            r: 0.5,
            eps_max: 5.0,
            tau_p: 0.1,
            theta_w: 2.0,
            alpha_vis: 0.5,
            r_search: 10.0,
            cadence: 10,
            min_traj_len: 10,
            w_wasserstein: 0.7,
            w_landscape: 0.3,
            segment_window: 50,
            grid_count: 64,
            sensor_fov: std::f64::consts::FRAC_PI_2,
            sensor_range: 3.0,
            sensor_sigma: 0.05,
            goal_cos_threshold: 0.8,
            blacklist_radius: 1.0,
            success_radius: 1.0,
            step_budget: 500,
            goal_bias_weight: 2.0,
            goal_bias_scale: 2.0,
            predict_horizon: 5,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation(format!("config key {key}: {msg}")))
            }
        }
        check(self.k >= 1, "K", "must be >= 1")?;
        check(self.gamma > 0.0 && self.gamma < 1.0, "gamma", "must lie in (0,1)")?;
        check(self.lambda > 0.0, "lambda", "must be > 0")?;
        check((0.0..=1.0).contains(&self.tau), "tau", "must lie in [0,1]")?;
        check((0.0..=1.0).contains(&self.alpha_sim), "alpha_sim", "must lie in [0,1]")?;
        check(self.sigma_p > 0.0, "sigma_p", "must be > 0")?;
        check(self.r.is_finite(), "r", "must be finite")?;
        check(self.eps_max > 0.0, "eps_max", "must be > 0")?;
        check(self.tau_p >= 0.0, "tau_p", "must be >= 0")?;
        check(self.theta_w > 0.0, "theta_w", "must be > 0")?;
        check(self.alpha_vis >= 0.0, "alpha_vis", "must be >= 0")?;
        check(self.r_search > 0.0, "R_search", "must be > 0")?;
        check(self.cadence >= 1, "cadence", "must be >= 1")?;
        check(self.min_traj_len >= 1, "min_traj_len", "must be >= 1")?;
        check(self.w_wasserstein >= 0.0, "w_wasserstein", "must be >= 0")?;
        check(self.w_landscape >= 0.0, "w_landscape", "must be >= 0")?;
        check(self.segment_window >= 2, "segment_window", "must be >= 2")?;
        check(self.grid_count >= 2, "grid_count", "must be >= 2")?;
        check(self.sensor_fov > 0.0, "sensor_fov", "must be > 0")?;
        check(self.sensor_range > 0.0, "sensor_range", "must be > 0")?;
        check(self.sensor_sigma >= 0.0, "sensor_sigma", "must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.goal_cos_threshold),
            "goal_cos_threshold",
            "must lie in [0,1]",
        )?;
        check(self.blacklist_radius > 0.0, "blacklist_radius", "must be > 0")?;
        check(self.success_radius > 0.0, "success_radius", "must be > 0")?;
        check(self.step_budget >= 1, "step_budget", "must be >= 1")?;
        check(self.goal_bias_weight >= 0.0, "goal_bias_weight", "must be >= 0")?;
        check(self.goal_bias_scale > 0.0, "goal_bias_scale", "must be > 0")?;
        check(self.predict_horizon >= 1, "predict_horizon", "must be >= 1")?;
        Ok(())
    }

    /// Parses TOML text. Missing keys take the defaults; unknown keys and
    /// out-of-range values are rejected.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Serializes every field, so a round trip reproduces the value exactly.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_toml())
    }
}
