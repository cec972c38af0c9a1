//! Training-free navigation toolkit: temporal scene-graph memory, topological
//! loop-closure signatures, and a grid-world simulator that measures their
//! effect on exploration efficiency.
//!
//! The crate splits into:
//! - [`model`]: shared domain types (poses, trajectories, scene graphs,
//!   configuration)
//! - [`term`]: temporal reasoning memory over scene-graph snapshots
//! - [`topology`]: trajectory embedding, Vietoris-Rips filtrations,
//!   persistent homology
//! - [`diagram_metrics`]: Wasserstein distance and persistence landscapes on
//!   diagrams
//! - [`tslc`]: loop-closure detection from topological trajectory signatures
//! - [`navsim`]: deterministic occupancy-grid navigation simulator with
//!   frontier exploration and SR/SPL evaluation

pub mod diagram_metrics;
pub mod error;
pub mod model;
pub mod navsim;
pub mod term;
pub mod topology;
pub mod tslc;

pub use error::{Error, Result};
pub use model::{Config, GoalSpec, Pose, SceneGraphSnapshot, SceneNode, SpatialEdge, Trajectory};
pub use topology::{PersistenceDiagram, PersistencePair};
pub use tslc::{LoopDetection, SignatureStore, TopologicalSignature};
