use serde::{Deserialize, Serialize};

use super::aero::{blade_flapping, corrected_thrust};
use super::dynamics::{allocate_rotors, integrate_rigid_body, mix_rotors, Integrator};
use super::motor::{motor_step, MotorConfig, MotorState, RotorSet};
use super::{QuadParams, QuadState};
use crate::control::{attitude_control, waypoint_control, ControlGains, WaypointControllerState};
use crate::error::{Error, Result};
use crate::math::{Rotation, Vec3};
use crate::wind::WindField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration step, s.
    pub dt: f64,
    /// s
    pub duration: f64,
    /// Log rate, Hz. `1 / (dt * log_rate)` must be an integer.
    pub log_rate: f64,
    /// NED waypoint, m.
    pub waypoint: Vec3,
    /// Start position; defaults to the waypoint.
    pub initial_position: Option<Vec3>,
    pub integrator: Integrator,
    /// Abort when any state component exceeds this magnitude.
    pub divergence_bound: f64,
    pub motor: MotorConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 60.0,
            log_rate: 10.0,
            waypoint: Vec3::new(0.0, 0.0, -50.0),
            initial_position: None,
            integrator: Integrator::Rk4,
            divergence_bound: 1e4,
            motor: MotorConfig::default(),
        }
    }
}

impl SimConfig {
    /// Integration steps between log samples.
    pub fn log_stride(&self) -> Result<usize> {
        let ratio = 1.0 / (self.dt * self.log_rate);
        let stride = ratio.round();
        if !(stride >= 1.0) || (ratio - stride).abs() > 1e-6 * stride {
            return Err(Error::invalid(
                "log_rate",
                format!("1/(dt*log_rate) = {ratio} is not a whole number of steps"),
            ));
        }
        Ok(stride as usize)
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        if !(self.log_rate > 0.0) {
            return Err(Error::invalid("log_rate", "must be positive"));
        }
        self.log_stride()?;
        if !self.waypoint.is_finite() || !self.initial_position.map_or(true, Vec3::is_finite) {
            return Err(Error::invalid("waypoint", "must be finite"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::invalid("divergence_bound", "must be positive"));
        }
        self.motor.validate()
    }
}

/// One logged sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSample {
    /// s
    pub t: f64,
    /// NED, m.
    pub position: Vec3,
    /// Roll, pitch, yaw, rad.
    pub attitude: Vec3,
    /// True wind, NED m/s.
    pub wind: Vec3,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub samples: Vec<LogSample>,
    /// Steps at which rotor allocation had to clamp a negative squared rate.
    pub saturated_steps: usize,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Spacing of the first two samples, s.
    pub fn sample_interval(&self) -> Option<f64> {
        match self.samples.as_slice() {
            [a, b, ..] => Some(b.t - a.t),
            _ => None,
        }
    }

    /// Checks that timestamps are evenly spaced to within `tol` seconds.
    pub fn check_regular(&self, tol: f64) -> Result<f64> {
        let dt = self.sample_interval().ok_or(Error::LogTooShort {
            len: self.len(),
            needed: 2,
        })?;
        for (i, w) in self.samples.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            if (step - dt).abs() > tol {
                return Err(Error::IrregularTimestamps {
                    index: i + 1,
                    expected: dt,
                    actual: step,
                });
            }
        }
        Ok(dt)
    }
}

/// Flies the closed loop for `cfg.duration` seconds.
///
/// Each step samples the wind, runs the waypoint and attitude controllers,
/// allocates and drives the four motors, applies the inflow and flapping
/// corrections to the delivered thrust and integrates the rigid body.
pub fn simulate(
    params: &QuadParams,
    gains: &ControlGains,
    wind: &mut WindField,
    cfg: &SimConfig,
) -> Result<TrajectoryLog> {
    params.validate()?;
    gains.validate()?;
    cfg.validate()?;
    let stride = cfg.log_stride()?;
    let steps = cfg.steps();
    let dt = cfg.dt;

    let mut state = QuadState::at_rest(cfg.initial_position.unwrap_or(cfg.waypoint));
    let yaw_hold = state.attitude.z;
    let mut ctrl = WaypointControllerState::default();
    let hover = MotorState::steady(params.hover_rotor_rate(), &cfg.motor);
    let mut motors: RotorSet = [hover; 4];
    let mut log = TrajectoryLog {
        samples: Vec::with_capacity(steps / stride + 1),
        saturated_steps: 0,
    };

    let diverged = |t: f64, detail: String| Error::Divergence { time: t, detail };

    for k in 0..=steps {
        let t = k as f64 * dt;
        let w = wind.sample(state.position, t);
        if k % stride == 0 {
            log.samples.push(LogSample {
                t,
                position: state.position,
                attitude: state.attitude,
                wind: w,
            });
        }
        if k == steps {
            break;
        }

        let cmd = waypoint_control(&state, cfg.waypoint, &mut ctrl, gains, yaw_hold, dt);
        let (force, torques) =
            attitude_control(&state, &cmd, params, gains).map_err(|e| diverged(t, e.to_string()))?;
        let alloc = allocate_rotors(force, torques, params);
        log.saturated_steps += usize::from(alloc.saturated);
        let desired = alloc.rotor_rates();
        for (m, rate) in motors.iter_mut().zip(desired) {
            *m = motor_step(m, rate, dt, &cfg.motor)?;
        }
        let omega_sq = motors.map(|m| m.rate * m.rate);
        let (thrust, mut delivered) = mix_rotors(omega_sq, params);

        let body_air = Rotation::from_euler(state.attitude).apply_inverse(w - state.velocity);
        let corrected = corrected_thrust(thrust, body_air, params.hover_induced_velocity)
            .map_err(|e| diverged(t, e.to_string()))?;
        let factor = if thrust > 0.0 {
            corrected.thrust / thrust
        } else {
            1.0
        };
        delivered.x *= factor;
        delivered.y *= factor;
        let thrust_body = blade_flapping(corrected.thrust, body_air.x, body_air.y, params.flapping_coeff);

        state = integrate_rigid_body(&state, thrust_body, delivered, w, params, dt, cfg.integrator);

        let t_next = t + dt;
        if !state.is_finite() {
            return Err(diverged(t_next, "non-finite state".into()));
        }
        if state.max_abs() > cfg.divergence_bound {
            return Err(diverged(
                t_next,
                format!("state magnitude {:.3e} exceeds bound {:.3e}", state.max_abs(), cfg.divergence_bound),
            ));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if state.attitude.x.abs() >= half_pi || state.attitude.y.abs() >= half_pi {
            return Err(diverged(t_next, format!("attitude {:?} left the controllable range", state.attitude.to_array())));
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadsim::drag_coefficient;

    #[test]
    fn log_stride_must_divide() {
        let mut cfg = SimConfig::default();
        assert_eq!(cfg.log_stride().unwrap(), 100);
        cfg.log_rate = 3.0;
        assert!(cfg.log_stride().is_err());
    }

    #[test]
    fn calm_hover_stays_put() {
        let cfg = SimConfig {
            duration: 5.0,
            ..SimConfig::default()
        };
        let log = simulate(&QuadParams::default(), &ControlGains::default(), &mut WindField::Constant(Vec3::ZERO), &cfg).unwrap();
        assert_eq!(log.len(), 51);
        assert_eq!(log.samples[50].t, 5.0);
        for s in &log.samples {
            assert!((s.position - cfg.waypoint).max_abs() < 1e-6, "{:?}", s.position);
        }
    }

    #[test]
    fn climbs_to_waypoint() {
        let cfg = SimConfig {
            duration: 60.0,
            waypoint: Vec3::new(0.0, 0.0, -10.0),
            initial_position: Some(Vec3::ZERO),
            ..SimConfig::default()
        };
        let log = simulate(&QuadParams::default(), &ControlGains::default(), &mut WindField::Constant(Vec3::ZERO), &cfg).unwrap();
        let end = log.samples.last().unwrap().position;
        assert!((end - cfg.waypoint).norm() < 0.05, "{end:?}");
    }

    #[test]
    fn horizontal_step_leaves_yaw_quiet() {
        let cfg = SimConfig {
            duration: 30.0,
            initial_position: Some(Vec3::new(-2.0, 0.0, -50.0)),
            ..SimConfig::default()
        };
        let log = simulate(&QuadParams::default(), &ControlGains::default(), &mut WindField::Constant(Vec3::ZERO), &cfg).unwrap();
        for s in &log.samples[100..] {
            assert!(s.attitude.z.abs() < 1e-3, "yaw {} at {}", s.attitude.z, s.t);
        }
        let end = log.samples.last().unwrap().position;
        assert!((end - cfg.waypoint).norm() < 0.05, "{end:?}");
    }

    #[test]
    fn steady_wind_tilts_into_the_wind() {
        let cfg = SimConfig {
            duration: 120.0,
            ..SimConfig::default()
        };
        let wind = Vec3::new(1.0, 2.0, 0.0);
        let log = simulate(&QuadParams::default(), &ControlGains::default(), &mut WindField::Constant(wind), &cfg).unwrap();
        let tail = &log.samples[log.len() - 200..];
        let n = tail.len() as f64;
        let phi = tail.iter().map(|s| s.attitude.x).sum::<f64>() / n;
        let theta = tail.iter().map(|s| s.attitude.y).sum::<f64>() / n;
        for s in tail {
            assert!((s.position - cfg.waypoint).norm() < 1.5);
        }
        let p = QuadParams::default();
        let speed = wind.norm();
        let tilt = (drag_coefficient(speed) * speed * speed / p.weight()).atan();
        let observed = (phi.tan().powi(2) + theta.tan().powi(2)).sqrt().atan();
        assert!((observed - tilt).abs() < 0.15 * tilt, "tilt {observed} vs {tilt}");
        // Leaning into a wind from the south-west means nose-up pitch and left roll.
        assert!(theta > 0.0 && phi < 0.0, "phi {phi} theta {theta}");
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let cfg = SimConfig {
            duration: 3.0,
            ..SimConfig::default()
        };
        let run = || {
            let spec = crate::wind::WindSpec::dryden(Vec3::new(1.0, 2.0, 0.0), Vec3::new(1.06, 1.06, 0.7));
            let mut w = WindField::from_spec(&spec, 42, cfg.duration, cfg.dt).unwrap();
            simulate(&QuadParams::default(), &ControlGains::default(), &mut w, &cfg).unwrap()
        };
        assert_eq!(run(), run());
    }
}
