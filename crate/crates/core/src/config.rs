//! Run configuration: one TOML file covering airframe, controller, wind,
//! trajectory, simulation, training and evaluation settings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::ControlGains;
use crate::error::{Error, Result};
use crate::estimate::TrainConfig;
use crate::math::Vec3;
use crate::quadsim::{Integrator, MotorConfig, QuadParams, SimConfig};
use crate::wind::WindSpec;

/// The full-default configuration shipped with the repository.
pub const DEFAULT_CONFIG_TEMPLATE: &str = include_str!("../../../config/default.toml");

fn default_hover_waypoint() -> Vec3 {
    Vec3::new(0.0, 0.0, -50.0)
}

fn default_line_waypoint() -> Vec3 {
    Vec3::new(100_000.0, 0.0, -50.0)
}

/// Flight plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Start at the waypoint and hold it.
    Hover {
        #[serde(default = "default_hover_waypoint")]
        waypoint: Vec3,
    },
    /// Fly from `start` toward a distant `waypoint`.
    Line {
        #[serde(default = "default_hover_waypoint")]
        start: Vec3,
        #[serde(default = "default_line_waypoint")]
        waypoint: Vec3,
    },
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec::Hover {
            waypoint: default_hover_waypoint(),
        }
    }
}

impl TrajectorySpec {
    pub fn line() -> Self {
        TrajectorySpec::Line {
            start: default_hover_waypoint(),
            waypoint: default_line_waypoint(),
        }
    }

    /// `hover` or `line`; recorded in trained models.
    pub fn name(&self) -> &'static str {
        match self {
            TrajectorySpec::Hover { .. } => "hover",
            TrajectorySpec::Line { .. } => "line",
        }
    }
}

/// Integration settings; the waypoint comes from the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub dt: f64,
    pub duration: f64,
    pub log_rate: f64,
    pub integrator: Integrator,
    pub divergence_bound: f64,
    pub motor: MotorConfig,
}

impl Default for SimSettings {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            duration: d.duration,
            log_rate: d.log_rate,
            integrator: d.integrator,
            divergence_bound: d.divergence_bound,
            motor: d.motor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    /// Histogram bin width in units of the true wind's standard deviation.
    pub histogram_bin_width: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            histogram_bin_width: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds the wind; other stages derive their seeds from it.
    pub seed: u64,
    pub quad: QuadParams,
    pub control: ControlGains,
    pub sim: SimSettings,
    pub trajectory: TrajectorySpec,
    pub wind: WindSpec,
    pub train: TrainConfig,
    pub evaluate: EvalSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            quad: QuadParams::default(),
            control: ControlGains::default(),
            sim: SimSettings::default(),
            trajectory: TrajectorySpec::default(),
            wind: WindSpec::piecewise_default(),
            train: TrainConfig::default(),
            evaluate: EvalSettings::default(),
        }
    }
}

/// A validated configuration and the hash that stamps its outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

/// Hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Loads and validates a file; the hash covers the file's bytes.
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(LoadedConfig {
            config: Self::from_toml(&text)?,
            hash: config_hash(&text),
        })
    }

    /// The configuration with its hash taken over its canonical TOML form.
    pub fn loaded(self) -> LoadedConfig {
        let hash = config_hash(&self.to_toml());
        LoadedConfig { config: self, hash }
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        self.control.validate()?;
        self.sim_config().validate()?;
        self.wind.validate()?;
        self.train.validate()?;
        if !(self.evaluate.histogram_bin_width > 0.0) {
            return Err(Error::invalid("histogram_bin_width", "must be positive"));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        let (waypoint, initial_position) = match &self.trajectory {
            TrajectorySpec::Hover { waypoint } => (*waypoint, None),
            TrajectorySpec::Line { start, waypoint } => (*waypoint, Some(*start)),
        };
        SimConfig {
            dt: self.sim.dt,
            duration: self.sim.duration,
            log_rate: self.sim.log_rate,
            waypoint,
            initial_position,
            integrator: self.sim.integrator,
            divergence_bound: self.sim.divergence_bound,
            motor: self.sim.motor.clone(),
        }
    }
}
