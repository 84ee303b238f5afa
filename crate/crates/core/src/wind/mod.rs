//! Wind sources sampled along a trajectory.
//!
//! All wind vectors are NED velocities in m/s. Time-only sources (constant,
//! piecewise-constant, Dryden, spectral, tabulated) ignore the query
//! position; gridded fields use both position and time.

mod dryden;
mod grid;
mod piecewise;
mod signal;
mod spectral;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dryden::{dryden_step, DrydenFilter, DrydenParams, DrydenWind};
pub use grid::{
    grid_from_csv, load_grid_wind, save_grid_wind, GridWindField, GRID_HEADER_LEN, GRID_MAGIC,
    GRID_VERSION,
};
pub use piecewise::{piecewise_constant_wind, PiecewiseConstantWind, WindSegment};
pub use signal::WindSignal;
pub use spectral::{
    dryden_spectrum, synth_spectral_signal, SpectralParams, SpectralSignal, SpectralWind,
};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Wind source configuration, as written in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WindSpec {
    Constant {
        mean: Vec3,
    },
    Piecewise {
        /// Horizontal component range, m/s.
        #[serde(default = "default_amplitude")]
        amplitude: [f64; 2],
        /// Segment length range, s. Lengths are drawn from `(lo, hi]`.
        #[serde(default = "default_interval")]
        interval: [f64; 2],
    },
    Dryden {
        mean: Vec3,
        /// Turbulence intensities (u, v, w), m/s.
        sigma: Vec3,
        /// Scale lengths (u, v, w), m.
        #[serde(default = "default_dryden_length")]
        length: Vec3,
        /// Nominal airspeed of the gust filters, m/s.
        #[serde(default = "default_dryden_airspeed")]
        airspeed: f64,
        /// Filter update interval, s. Defaults to the simulation step.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        update_dt: Option<f64>,
    },
    Spectral {
        mean: Vec3,
        /// Per-component turbulence intensity, m/s.
        sigma: Vec3,
        /// Scale length, m.
        length: f64,
        /// Shape constants `[a, b, c]` for the along-wind component.
        #[serde(default = "default_longitudinal_shape")]
        longitudinal: [f64; 3],
        /// Shape constants `[a, b, c]` for the cross and vertical components.
        #[serde(default = "default_transverse_shape")]
        transverse: [f64; 3],
        bins: usize,
        /// Highest wavenumber, rad/m.
        omega_max: f64,
        /// Airspeed mapping wavenumber to frequency, m/s.
        #[serde(default = "default_dryden_airspeed")]
        airspeed: f64,
    },
    Grid {
        path: PathBuf,
    },
    File {
        path: PathBuf,
    },
}

fn default_amplitude() -> [f64; 2] {
    [-7.0, 7.0]
}

fn default_interval() -> [f64; 2] {
    [0.0, 15.0]
}

fn default_dryden_length() -> Vec3 {
    DrydenParams::default().length
}

fn default_dryden_airspeed() -> f64 {
    DrydenParams::default().airspeed
}

fn default_longitudinal_shape() -> [f64; 3] {
    [0.0, 1.0, 1.0]
}

fn default_transverse_shape() -> [f64; 3] {
    [12.0, 4.0, 2.0]
}

impl WindSpec {
    pub fn piecewise_default() -> Self {
        WindSpec::Piecewise {
            amplitude: default_amplitude(),
            interval: default_interval(),
        }
    }

    pub fn dryden(mean: Vec3, sigma: Vec3) -> Self {
        WindSpec::Dryden {
            mean,
            sigma,
            length: default_dryden_length(),
            airspeed: default_dryden_airspeed(),
            update_dt: None,
        }
    }

    /// Mean wind of the source, when it has one.
    pub fn mean(&self) -> Option<Vec3> {
        match self {
            WindSpec::Constant { mean } | WindSpec::Dryden { mean, .. } | WindSpec::Spectral { mean, .. } => {
                Some(*mean)
            }
            _ => None,
        }
    }

    fn dryden_params(&self, sim_dt: f64) -> Option<DrydenParams> {
        match self {
            WindSpec::Dryden { sigma, length, airspeed, update_dt, .. } => Some(DrydenParams {
                sigma: *sigma,
                length: *length,
                airspeed: *airspeed,
                update_dt: update_dt.unwrap_or(sim_dt),
            }),
            _ => None,
        }
    }

    fn spectral_params(&self) -> Option<[SpectralParams; 3]> {
        match self {
            WindSpec::Spectral { sigma, length, longitudinal, transverse, bins, omega_max, .. } => {
                let make = |s: f64, [a, b, c]: [f64; 3]| SpectralParams {
                    sigma: s,
                    length: *length,
                    a,
                    b,
                    c,
                    bins: *bins,
                    omega_max: *omega_max,
                };
                Some([
                    make(sigma.x, *longitudinal),
                    make(sigma.y, *transverse),
                    make(sigma.z, *transverse),
                ])
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WindSpec::Constant { mean } => {
                if !mean.is_finite() {
                    return Err(Error::invalid("wind.mean", "must be finite"));
                }
            }
            WindSpec::Piecewise { amplitude, interval } => {
                if !(amplitude[0] <= amplitude[1]) || !amplitude.iter().all(|a| a.is_finite()) {
                    return Err(Error::invalid("wind.amplitude", "need finite lo <= hi"));
                }
                if !(interval[0] >= 0.0 && interval[1] > interval[0] && interval[1].is_finite()) {
                    return Err(Error::invalid("wind.interval", "need 0 <= lo < hi"));
                }
            }
            WindSpec::Dryden { update_dt, .. } => {
                if let Some(dt) = update_dt {
                    if !(*dt > 0.0) {
                        return Err(Error::invalid("wind.update_dt", "must be positive"));
                    }
                }
                self.dryden_params(1.0).expect("dryden").validate()?;
            }
            WindSpec::Spectral { airspeed, .. } => {
                for p in self.spectral_params().expect("spectral") {
                    p.validate()?;
                }
                if !(*airspeed > 0.0) {
                    return Err(Error::invalid("wind.airspeed", "must be positive"));
                }
            }
            WindSpec::Grid { .. } | WindSpec::File { .. } => {}
        }
        Ok(())
    }

    /// Short human-readable description for report metadata.
    pub fn describe(&self) -> String {
        match self {
            WindSpec::Constant { mean } => format!("constant mean={:?}", mean.to_array()),
            WindSpec::Piecewise { amplitude, interval } => {
                format!("piecewise amplitude={amplitude:?} interval={interval:?}")
            }
            WindSpec::Dryden { mean, sigma, length, airspeed, update_dt } => format!(
                "dryden mean={:?} sigma={:?} length={:?} airspeed={airspeed} update_dt={}",
                mean.to_array(),
                sigma.to_array(),
                length.to_array(),
                update_dt.map_or("sim".to_string(), |d| d.to_string()),
            ),
            WindSpec::Spectral { mean, sigma, length, bins, airspeed, .. } => format!(
                "spectral mean={:?} sigma={:?} length={length} bins={bins} airspeed={airspeed}",
                mean.to_array(),
                sigma.to_array(),
            ),
            WindSpec::Grid { path } => format!("grid {}", path.display()),
            WindSpec::File { path } => format!("file {}", path.display()),
        }
    }
}

/// A wind source ready to be sampled.
#[derive(Clone, Debug)]
pub enum WindField {
    Constant(Vec3),
    PiecewiseConstant(PiecewiseConstantWind),
    Dryden(DrydenWind),
    Spectral(SpectralWind),
    Grid(Arc<GridWindField>),
    Tabulated(Arc<WindSignal>),
}

impl WindField {
    /// Builds the field described by `spec`. `duration` bounds the span that
    /// piecewise-constant segments are generated for; `sim_dt` is the Dryden
    /// update interval when the spec leaves it unset.
    pub fn from_spec(spec: &WindSpec, seed: u64, duration: f64, sim_dt: f64) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            WindSpec::Constant { mean } => WindField::Constant(*mean),
            WindSpec::Piecewise { amplitude, interval } => WindField::PiecewiseConstant(
                piecewise_constant_wind(seed, *amplitude, *interval, duration)?,
            ),
            WindSpec::Dryden { mean, .. } => {
                let params = spec.dryden_params(sim_dt).expect("dryden");
                WindField::Dryden(DrydenWind::new(*mean, params, seed)?)
            }
            WindSpec::Spectral { mean, airspeed, .. } => {
                let params = spec.spectral_params().expect("spectral");
                WindField::Spectral(SpectralWind::new(*mean, params, *airspeed, seed)?)
            }
            WindSpec::Grid { path } => WindField::Grid(Arc::new(load_grid_wind(path)?)),
            WindSpec::File { path } => WindField::Tabulated(Arc::new(WindSignal::read_csv(path)?)),
        })
    }

    /// Wind at `position` (m, NED) and time `t` (s). Stateful sources advance
    /// monotonically; querying the same `t` twice returns the same value.
    pub fn sample(&mut self, position: Vec3, t: f64) -> Vec3 {
        match self {
            WindField::Constant(w) => *w,
            WindField::PiecewiseConstant(p) => p.sample(t),
            WindField::Dryden(d) => d.sample(t),
            WindField::Spectral(s) => s.sample(t),
            WindField::Grid(g) => g.sample(position, t),
            WindField::Tabulated(s) => s.sample(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = WindSpec::dryden(Vec3::new(1.0, 2.0, 0.0), Vec3::new(1.06, 1.06, 0.7));
        let text = toml::to_string(&spec).unwrap();
        let back: WindSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn spec_rejects_unknown_keys() {
        let text = "kind = \"constant\"\nmean = [1.0, 0.0, 0.0]\nbogus = 3\n";
        assert!(toml::from_str::<WindSpec>(text).is_err());
    }

    #[test]
    fn piecewise_defaults_apply() {
        let spec: WindSpec = toml::from_str("kind = \"piecewise\"").unwrap();
        assert_eq!(spec, WindSpec::piecewise_default());
    }

    #[test]
    fn constant_field() {
        let mut f = WindField::from_spec(&WindSpec::Constant { mean: Vec3::new(1.0, 2.0, 0.0) }, 0, 10.0, 1e-3).unwrap();
        assert_eq!(f.sample(Vec3::ZERO, 3.0), Vec3::new(1.0, 2.0, 0.0));
    }
}
