//! Discrete-time simulator of a wireless sensor and actor network in which
//! mobile actors chase and eliminate randomly spawned stationary targets.
//!
//! The crate compares sensor-to-actor communication protocols — temporal
//! (TS), spatiotemporal (STS), and decision-aware (DAS) data suppression,
//! each paired with nearest-actor or load-balancing actor selection — on
//! communication cost (transfers, relay hops) and capture performance
//! (time from spawn to elimination).
//!
//! ```
//! use wsan_sim::engine;
//! use wsan_sim::protocol::{Selection, SuppressionMethod, SuppressionPolicy};
//! use wsan_sim::world::WorldConfig;
//!
//! let cfg = WorldConfig {
//!     width: 50,
//!     height: 50,
//!     actor_count: 4,
//!     elimination_quota: 30,
//!     ..WorldConfig::default()
//! };
//! let policy = SuppressionPolicy {
//!     method: SuppressionMethod::Spatiotemporal { alpha: 0.9 },
//!     selection: Selection::Nearest,
//! };
//! let metrics = engine::run(&cfg, policy, 42).unwrap();
//! assert_eq!(metrics.eliminated(), 30);
//! assert!(metrics.hops >= metrics.transfers);
//! ```
//!
//! Runs are deterministic: a (config, policy, seed) triple always produces
//! the same metrics, and independent runs can execute in parallel (enabled
//! through the default `parallel` feature, used by [`harness::run_sweep`]).

pub mod engine;
pub mod harness;
pub mod navigation;
pub mod protocol;
pub mod verify;
pub mod world;

pub use engine::{RunMetrics, Simulation};
pub use harness::Algorithm;
pub use protocol::{Selection, SuppressionMethod, SuppressionPolicy};
pub use world::{SegmentCoord, WorldConfig};
