//! Sweep execution: the world x seed x ablation cross product, run in
//! parallel and serialized in a canonical order so output bytes never depend
//! on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Config;

use super::episode::{compute_metrics, run_episode, Ablation, EpisodeResult};
use super::world::GridWorld;

/// One episode's serialized record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub record: String,
    pub world: String,
    pub seed: u64,
    pub ablation: Ablation,
    #[serde(flatten)]
    pub result: EpisodeResult,
}

/// Per-ablation aggregate record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub record: String,
    pub ablation: Ablation,
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub mean_path_length: f64,
    pub mean_revisited_cells: f64,
    pub mean_loop_detections: f64,
}

/// Everything a sweep produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub episodes: Vec<EpisodeRecord>,
    pub summaries: Vec<SummaryRecord>,
    /// (world, seed, ablation, message) for episodes that failed.
    pub failures: Vec<(String, u64, Ablation, String)>,
}

impl SweepOutcome {
    /// Canonical line-delimited serialization: episode records sorted by
    /// (world, seed, ablation), then summaries sorted by ablation tag. A
    /// trailing `incomplete` record marks aborted sweeps.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.episodes {
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
        for s in &self.summaries {
            out.push_str(&serde_json::to_string(s).expect("summary serializes"));
            out.push('\n');
        }
        if !self.failures.is_empty() {
            let mut failed: Vec<String> = self
                .failures
                .iter()
                .map(|(w, s, a, m)| format!("{w}/seed{s}/{a}: {m}"))
                .collect();
            failed.sort();
            out.push_str(
                &serde_json::to_string(&serde_json::json!({
                    "record": "incomplete",
                    "failed": failed,
                }))
                .expect("marker serializes"),
            );
            out.push('\n');
        }
        out
    }

    pub fn summary_for(&self, ablation: Ablation) -> Option<&SummaryRecord> {
        self.summaries.iter().find(|s| s.ablation == ablation)
    }
}

/// Runs the full cross product. Individual episode panics or errors are
/// captured as failures rather than poisoning the whole sweep.
pub fn run_sweep(
    worlds: &[GridWorld],
    cfg: &Config,
    seeds: &[u64],
    ablations: &[Ablation],
) -> Result<SweepOutcome> {
    if worlds.is_empty() {
        return Err(Error::Validation("sweep needs at least one world".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Validation("sweep needs at least one seed".into()));
    }
    if ablations.is_empty() {
        return Err(Error::Validation("sweep needs at least one ablation".into()));
    }

    let mut jobs: Vec<(&GridWorld, u64, Ablation)> = Vec::new();
    for world in worlds {
        for &seed in seeds {
            for &ablation in ablations {
                jobs.push((world, seed, ablation));
            }
        }
    }

    let results: Vec<(String, u64, Ablation, std::result::Result<EpisodeResult, String>)> = jobs
        .par_iter()
        .map(|&(world, seed, ablation)| {
            let run = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                run_episode(world, cfg, seed, ablation)
            }));
            let outcome = match run {
                Ok(Ok(r)) => Ok(r),
                Ok(Err(e)) => Err(e.to_string()),
                Err(panic) => Err(panic_message(&panic)),
            };
            (world.name.clone(), seed, ablation, outcome)
        })
        .collect();

    let mut episodes = Vec::new();
    let mut failures = Vec::new();
    for (world, seed, ablation, outcome) in results {
        match outcome {
            Ok(result) => episodes.push(EpisodeRecord {
                record: "episode".into(),
                world,
                seed,
                ablation,
                result,
            }),
            Err(msg) => failures.push((world, seed, ablation, msg)),
        }
    }
    episodes.sort_by(|a, b| {
        a.world
            .cmp(&b.world)
            .then(a.seed.cmp(&b.seed))
            .then(a.ablation.tag().cmp(b.ablation.tag()))
    });

    let mut tags: Vec<Ablation> = ablations.to_vec();
    tags.sort_by_key(|a| a.tag());
    tags.dedup();
    let mut summaries = Vec::new();
    for ablation in tags {
        let subset: Vec<EpisodeResult> = episodes
            .iter()
            .filter(|r| r.ablation == ablation)
            .map(|r| r.result.clone())
            .collect();
        if subset.is_empty() {
            continue;
        }
        let (sr, spl) = compute_metrics(&subset)?;
        let n = subset.len() as f64;
        summaries.push(SummaryRecord {
            record: "summary".into(),
            ablation,
            episodes: subset.len(),
            sr,
            spl,
            mean_path_length: subset.iter().map(|r| r.path_length).sum::<f64>() / n,
            mean_revisited_cells: subset.iter().map(|r| r.revisited_cells as f64).sum::<f64>() / n,
            mean_loop_detections: subset.iter().map(|r| r.loop_detections as f64).sum::<f64>()
                / n,
        });
    }

    Ok(SweepOutcome { episodes, summaries, failures })
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        format!("episode panicked: {s}")
    } else if let Some(s) = panic.downcast_ref::<String>() {
        format!("episode panicked: {s}")
    } else {
        "episode panicked".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navsim::worldgen::random_world;

    #[test]
    fn sweep_cardinality_and_determinism() {
        let worlds = vec![random_world(1)];
        let cfg = Config { step_budget: 60, ..Config::default() };
        let a = run_sweep(&worlds, &cfg, &[0], &[Ablation::Full, Ablation::Baseline]).unwrap();
        assert_eq!(a.episodes.len(), 2);
        assert_eq!(a.summaries.len(), 2);
        assert!(a.failures.is_empty());
        let b = run_sweep(&worlds, &cfg, &[0], &[Ablation::Full, Ablation::Baseline]).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn sweep_rejects_empty_inputs() {
        let worlds = vec![random_world(1)];
        let cfg = Config::default();
        assert!(run_sweep(&[], &cfg, &[0], &[Ablation::Full]).is_err());
        assert!(run_sweep(&worlds, &cfg, &[], &[Ablation::Full]).is_err());
        assert!(run_sweep(&worlds, &cfg, &[0], &[]).is_err());
    }

    #[test]
    fn sweep_records_are_sorted() {
        let worlds = vec![random_world(2), random_world(1)];
        let cfg = Config { step_budget: 40, ..Config::default() };
        let out = run_sweep(&worlds, &cfg, &[1, 0], &[Ablation::Baseline, Ablation::Full]).unwrap();
        let keys: Vec<(String, u64, &str)> = out
            .episodes
            .iter()
            .map(|r| (r.world.clone(), r.seed, r.ablation.tag()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
