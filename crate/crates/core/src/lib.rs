//! Quadcopter flight simulation in wind, LSTM-based wind estimation from
//! flight logs, a wind-triangle baseline and the evaluation metrics used to
//! compare them.

pub mod config;
pub mod control;
pub mod error;
pub mod estimate;
pub mod io;
pub mod math;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod quadsim;
pub mod wind;

pub use config::{LoadedConfig, RunConfig, TrajectorySpec};
pub use control::{ControlGains, WaypointControllerState};
pub use error::{Error, Result};
pub use math::{Rotation, Vec3};
pub use quadsim::{QuadParams, QuadState, SimConfig, TrajectoryLog};
pub use wind::{WindField, WindSpec};
