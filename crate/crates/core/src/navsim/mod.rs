//! Deterministic 2D occupancy-grid navigation simulator: synthetic
//! perception feeding the temporal memory, cadence-gated loop checks driving
//! frontier blacklisting, and SR/SPL evaluation over episode sweeps.

pub mod agent;
pub mod episode;
pub mod runner;
pub mod world;
pub mod worldgen;

pub use agent::{sense, step, update_belief, Action, AgentState, Belief, BlacklistRegion, OccupancyBelief};
pub use episode::{
    compute_metrics, cosine_similarity, run_episode, run_episode_traced, select_frontier,
    Ablation, EpisodeResult, EpisodeTrace,
};
pub use runner::{run_sweep, EpisodeRecord, SummaryRecord, SweepOutcome};
pub use world::{Cell, GridWorld, WorldObject, WorldSidecar, FEATURE_DIM};
pub use worldgen::{bundled_suite, random_world, write_fixtures};
