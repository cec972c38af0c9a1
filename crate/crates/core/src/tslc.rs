//! Loop-closure detection from topological trajectory signatures.
//!
//! Every qualifying trajectory is summarized by a filtered dimension-1
//! persistence diagram plus its landscape, anchored at the agent position.
//! New signatures are compared against stored ones whose anchors lie inside
//! the search radius; a loop is flagged when the best combined distance
//! falls below the threshold.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagram_metrics::{combined_distance, landscape, Landscape};
use crate::error::{Error, Result};
use crate::model::{Config, Pose, Trajectory};
use crate::topology::{
    build_vr_filtration, compute_persistence, embed_trajectory, embed_trajectory_enhanced,
    filter_diagram, PersistencePair, ProjectionBasis,
};

/// Loop fingerprint of one trajectory segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologicalSignature {
    /// Filtered dimension-1 pairs (persistence > tau_p).
    pub pd1: Vec<PersistencePair>,
    pub landscape: Landscape,
    /// Agent position when the signature was computed.
    pub anchor: [f64; 2],
    pub created_at: u64,
}

/// Append-only store of signatures, ordered by creation time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignatureStore {
    entries: Vec<TopologicalSignature>,
}

impl SignatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TopologicalSignature] {
        &self.entries
    }

    pub fn append(&mut self, sig: TopologicalSignature) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if sig.created_at < last.created_at {
                return Err(Error::Ordering(format!(
                    "signature created_at {} before {}",
                    sig.created_at, last.created_at
                )));
            }
        }
        self.entries.push(sig);
        Ok(())
    }

    /// One JSON record per line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for sig in &self.entries {
            serde_json::to_writer(&mut file, sig)
                .map_err(|e| Error::Validation(format!("store serialization: {e}")))?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut store = Self::new();
        for (lineno, line) in file.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let sig: TopologicalSignature = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("store line {}: {e}", lineno + 1)))?;
            store.append(sig)?;
        }
        Ok(store)
    }
}

/// Outcome of a loop check.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopDetection {
    pub detected: bool,
    /// Index into the store of the best match, when one was compared.
    pub matched_index: Option<usize>,
    /// `exp(-d_min / theta_w)`; 0.0 when nothing was compared.
    pub confidence: f64,
    /// Best combined distance; infinite when nothing was compared.
    pub d_min: f64,
}

impl LoopDetection {
    /// The null triple returned for short trajectories.
    pub fn null() -> Self {
        Self { detected: false, matched_index: None, confidence: 0.0, d_min: f64::INFINITY }
    }
}

/// True on steps where a signature is computed.
pub fn cadence_gate(t: u64, cfg: &Config) -> bool {
    t % cfg.cadence == 0
}

/// Computes the signature of a trajectory segment: embed, build the
/// Vietoris-Rips filtration, extract and filter the dimension-1 diagram,
/// sample its landscape, and anchor at the final position.
///
/// `visual` optionally supplies per-point features plus a projection basis
/// for the enhanced embedding.
pub fn compute_signature(
    segment: &[(u64, Pose)],
    cfg: &Config,
    visual: Option<(&[Vec<f64>], &ProjectionBasis)>,
) -> Result<TopologicalSignature> {
    if segment.len() < cfg.min_traj_len {
        return Err(Error::Validation(format!(
            "trajectory segment of {} points is shorter than min_traj_len {}",
            segment.len(),
            cfg.min_traj_len
        )));
    }
    let cloud = match visual {
        Some((features, basis)) => {
            embed_trajectory_enhanced(segment, features, basis, cfg.r, cfg.alpha_vis)?
        }
        None => embed_trajectory(segment, cfg.r)?,
    };
    let filt = build_vr_filtration(&cloud, cfg.eps_max)?;
    let pd = compute_persistence(&filt)?;
    let pd1 = filter_diagram(&pd, cfg.tau_p).dim1_pairs;
    let landscape = landscape(&pd1, cfg.grid_count, cfg.eps_max)?;
    let last = segment.last().expect("segment nonempty").1;
    Ok(TopologicalSignature {
        pd1,
        landscape,
        anchor: [last.x, last.y],
        created_at: segment.last().expect("segment nonempty").0,
    })
}

/// Runs one loop-closure check over the trajectory's recent segment.
///
/// Short trajectories return the null triple without touching the store.
/// Otherwise the new signature is compared against every stored signature
/// anchored within `R_search` of the current position, the best match is
/// thresholded at `theta_w`, and the new signature is appended.
pub fn check_loop(
    store: &mut SignatureStore,
    traj: &Trajectory,
    cfg: &Config,
) -> Result<LoopDetection> {
    if traj.len() < cfg.min_traj_len {
        return Ok(LoopDetection::null());
    }
    let segment = traj.tail(cfg.segment_window);
    let sig = compute_signature(segment, cfg, None)?;

    let mut d_min = f64::INFINITY;
    let mut matched_index = None;
    for (idx, candidate) in store.entries.iter().enumerate() {
        let gap = ((sig.anchor[0] - candidate.anchor[0]).powi(2)
            + (sig.anchor[1] - candidate.anchor[1]).powi(2))
        .sqrt();
        if gap > cfg.r_search {
            continue;
        }
        let d = combined_distance(&sig, candidate, cfg.w_wasserstein, cfg.w_landscape)?;
        // Strict < keeps the earliest-created signature on exact ties.
        if d < d_min {
            d_min = d;
            matched_index = Some(idx);
        }
    }

    store.append(sig)?;
    let detected = matched_index.is_some() && d_min < cfg.theta_w;
    let confidence = if matched_index.is_some() { (-d_min / cfg.theta_w).exp() } else { 0.0 };
    Ok(LoopDetection { detected, matched_index, confidence, d_min })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_trajectory(n: usize, radius: f64, start_t: u64) -> Trajectory {
        let mut traj = Trajectory::new();
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let pose = Pose::new(radius * a.cos(), radius * a.sin(), 0.0).unwrap();
            traj.append(start_t + i as u64, pose).unwrap();
        }
        traj
    }

    fn line_trajectory(n: usize) -> Trajectory {
        let mut traj = Trajectory::new();
        for i in 0..n {
            traj.append(i as u64, Pose::new(0.25 * i as f64, 0.0, 0.0).unwrap()).unwrap();
        }
        traj
    }

    #[test]
    fn cadence_gate_matches_interval() {
        let cfg = Config::default();
        assert!(cadence_gate(0, &cfg));
        assert!(cadence_gate(10, &cfg));
        assert!(!cadence_gate(7, &cfg));
    }

    #[test]
    fn signature_of_line_is_empty() {
        let cfg = Config::default();
        let traj = line_trajectory(10);
        let sig = compute_signature(traj.points(), &cfg, None).unwrap();
        assert!(sig.pd1.is_empty());
        assert!(sig.landscape.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn signature_of_loop_has_prominent_pair() {
        let cfg = Config::default();
        let traj = circle_trajectory(20, 2.0, 0);
        let sig = compute_signature(traj.points(), &cfg, None).unwrap();
        let prominent: Vec<_> = sig.pd1.iter().filter(|p| p.persistence() > 1.0).collect();
        assert_eq!(prominent.len(), 1, "{:?}", sig.pd1);
    }

    #[test]
    fn signature_rotating_heading_shifts_births_only_slightly() {
        // Same circle, heading either constant or sweeping: one prominent
        // pair each, births within 2r of each other.
        let cfg = Config::default();
        let n = 20;
        let flat = circle_trajectory(n, 2.0, 0);
        let mut rotating = Trajectory::new();
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            rotating
                .append(i as u64, Pose::new(2.0 * a.cos(), 2.0 * a.sin(), a).unwrap())
                .unwrap();
        }
        let sig_flat = compute_signature(flat.points(), &cfg, None).unwrap();
        let sig_rot = compute_signature(rotating.points(), &cfg, None).unwrap();
        let pf: Vec<_> = sig_flat.pd1.iter().filter(|p| p.persistence() > 1.0).collect();
        let pr: Vec<_> = sig_rot.pd1.iter().filter(|p| p.persistence() > 1.0).collect();
        assert_eq!(pf.len(), 1);
        assert_eq!(pr.len(), 1);
        assert!((pf[0].birth - pr[0].birth).abs() <= 2.0 * cfg.r);
    }

    #[test]
    fn signature_rejects_short_segment() {
        let cfg = Config::default();
        let traj = line_trajectory(9);
        assert!(compute_signature(traj.points(), &cfg, None).is_err());
    }

    #[test]
    fn check_loop_short_trajectory_null() {
        let cfg = Config::default();
        let mut store = SignatureStore::new();
        let traj = line_trajectory(9);
        let det = check_loop(&mut store, &traj, &cfg).unwrap();
        assert_eq!(det, LoopDetection::null());
        assert!(store.is_empty());
    }

    #[test]
    fn check_loop_self_match_high_confidence() {
        let cfg = Config::default();
        let mut store = SignatureStore::new();
        let first = circle_trajectory(20, 2.0, 0);
        check_loop(&mut store, &first, &cfg).unwrap();
        assert_eq!(store.len(), 1);

        // Second lap: same geometry, later timesteps.
        let mut second = circle_trajectory(20, 2.0, 0);
        for i in 0..20 {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 20.0;
            second
                .append(20 + i as u64, Pose::new(2.0 * a.cos(), 2.0 * a.sin(), 0.0).unwrap())
                .unwrap();
        }
        let det = check_loop(&mut store, &second, &cfg).unwrap();
        assert!(det.detected);
        assert_eq!(det.matched_index, Some(0));
        assert!(det.confidence > 0.9, "confidence {}", det.confidence);
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn check_loop_far_anchor_not_compared() {
        let cfg = Config::default();
        let mut store = SignatureStore::new();
        let far = circle_trajectory(20, 2.0, 0);
        let mut far_sig = compute_signature(far.points(), &cfg, None).unwrap();
        far_sig.anchor = [50.0, 0.0];
        store.append(far_sig).unwrap();

        let traj = circle_trajectory(20, 2.0, 0);
        let det = check_loop(&mut store, &traj, &cfg).unwrap();
        assert!(!det.detected);
        assert_eq!(det.matched_index, None);
        assert_eq!(det.confidence, 0.0);
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn store_append_only_ordering() {
        let mut store = SignatureStore::new();
        let l = Landscape { eps_max: 5.0, values: vec![0.0; 8] };
        let sig = |t: u64| TopologicalSignature {
            pd1: vec![],
            landscape: l.clone(),
            anchor: [0.0, 0.0],
            created_at: t,
        };
        store.append(sig(5)).unwrap();
        store.append(sig(5)).unwrap();
        assert!(store.append(sig(4)).is_err());
    }

    #[test]
    fn store_round_trip_reproduces_decisions() {
        let cfg = Config::default();
        let mut store = SignatureStore::new();
        check_loop(&mut store, &circle_trajectory(20, 2.0, 0), &cfg).unwrap();
        check_loop(&mut store, &circle_trajectory(25, 1.5, 100), &cfg).unwrap();

        let dir = std::env::temp_dir().join(format!("tslc_store_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("store.jsonl");
        store.save(&path).unwrap();
        let reloaded = SignatureStore::load(&path).unwrap();
        assert_eq!(reloaded, store);

        // Identical decision on a fresh query, bit for bit.
        let query = circle_trajectory(20, 2.0, 200);
        let mut a = store.clone();
        let mut b = reloaded;
        let da = check_loop(&mut a, &query, &cfg).unwrap();
        let db = check_loop(&mut b, &query, &cfg).unwrap();
        assert_eq!(da.detected, db.detected);
        assert_eq!(da.matched_index, db.matched_index);
        assert_eq!(da.d_min.to_bits(), db.d_min.to_bits());
        assert_eq!(da.confidence.to_bits(), db.confidence.to_bits());
        std::fs::remove_dir_all(&dir).ok();
    }
}
