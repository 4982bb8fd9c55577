//! Deterministic time-stepped traffic micro-simulator on a Manhattan grid.
//!
//! Vehicles commute on random routes over a lattice of bidirectional roads and
//! contend for whole-intersection access. Four coordination strategies are
//! implemented behind one plug-in interface:
//!
//! - `eb` — emergent behavior: per-vehicle "hurry" pressure with neighbor
//!   spreading; the hurriest lane leader crosses, near-equal queues cross as
//!   platoons.
//! - `coop` — centralized cooperative auction: one sealed-bid auction orders
//!   all participants into a crossing schedule.
//! - `comp` — centralized competitive auction: only the winner crosses,
//!   losers re-bid once the intersection frees.
//! - `dauction` — decentralized auction: approaching vehicles broadcast bids
//!   and cross in bid order, newcomers may overtake the ranking.
//!
//! A run is a pure function of (configuration, seed): one step is one second,
//! and every random draw comes from a single seeded ChaCha stream. The
//! `harness` module batches runs, aggregates crossing/traffic waiting times,
//! and emits CSV.

pub mod config;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod network;
pub mod strategy;

/// Random stream used everywhere; ChaCha keeps runs reproducible across
/// platforms and library versions.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub use config::{Approach, ExperimentConfig};
pub use engine::{
    IntersectionState, Occupancy, RoutePolicy, SimParams, Vehicle, VehicleId, VehicleState, World,
    WorldView,
};
pub use error::{Error, Result};
pub use harness::{run_experiment, run_single, write_csv, ExperimentResult, RunSummary};
pub use metrics::{batch_stats, BatchStats, RunMetrics};
pub use network::{build_grid, sample_route, EdgeId, Grid, NodeId, Route};
pub use strategy::{strategy_for, Grant, Strategy, StrategyDecision};
