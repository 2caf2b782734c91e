//! Deterministic desk-scale simulator of UAV-mounted 5G base stations
//! serving sliced users, with heuristic baselines, an exhaustive
//! placement/allocation bound, and a from-scratch multi-agent dual-DQN
//! learner.
//!
//! The crate is organized along the data path:
//!
//! - [`env`] generates episodes and moves UAVs;
//! - [`radio`] computes SINR, association, MCS, and data rates;
//! - [`slicing`] turns per-UAV bandwidth splits into PRB schedules and
//!   SLA scores;
//! - [`baselines`] holds the Random / RAPoC / PAPoC comparison heuristics;
//! - [`oracle`] exhaustively solves the discretized joint problem;
//! - [`learn`] trains and evaluates the dual-DQN agents.
//!
//! Everything is seed-deterministic: the same configuration and seed
//! reproduce the same worlds, decisions, and trained weights.

pub mod baselines;
pub mod env;
pub mod error;
pub mod learn;
pub mod oracle;
pub mod radio;
pub mod slicing;

pub use env::{ArenaConfig, MoveAction, SliceKind, UavState, UserEquipment, Vec2, WorldState};
pub use error::{CheckpointError, ConfigError, OracleError, TrainError};
pub use learn::{EvalResult, TrainConfig, TrainOutput};
pub use oracle::{OracleConfig, OracleSolution};
pub use radio::{ChannelParams, LinkReport, McsEntry, McsTable};
pub use slicing::{BandwidthSplit, ScheduleOutcome};
