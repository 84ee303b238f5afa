//! Saturated PID waypoint controller feeding a feedback-linearised PD
//! attitude controller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::quadsim::{QuadParams, QuadState};

/// Position-integral clamp, m s.
pub const INTEGRAL_LIMIT: f64 = 50.0;
/// Smallest admissible `|cos(phi) cos(theta)|` in the thrust command.
pub const GIMBAL_EPSILON: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlGains {
    pub kp: f64,
    pub kd: f64,
    pub ki: f64,
    /// Rate damping K1..K3.
    pub damping: [f64; 3],
    /// Attitude proportional gains Kp1..Kp3.
    pub kp_att: [f64; 3],
    /// Attitude derivative gains Kd1..Kd3.
    pub kd_att: [f64; 3],
    /// rad
    pub phi_max: f64,
    /// rad
    pub theta_max: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            kp: 0.3,
            kd: 0.25,
            ki: 0.0002,
            damping: [21.93, 21.93, 48.0],
            kp_att: [4.65, 4.65, 3.77],
            kd_att: [0.1872, 0.1872, 0.1496],
            phi_max: 0.8,
            theta_max: 0.8,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        let gains = [self.kp, self.kd, self.ki]
            .into_iter()
            .chain(self.damping)
            .chain(self.kp_att)
            .chain(self.kd_att);
        if gains.into_iter().any(|g| !(g.is_finite() && g >= 0.0)) {
            return Err(Error::invalid("gains", "all gains must be finite and non-negative"));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        for (name, v) in [("phi_max", self.phi_max), ("theta_max", self.theta_max)] {
            if !(v > 0.0 && v < half_pi) {
                return Err(Error::invalid(name, format!("must lie in (0, pi/2), got {v}")));
            }
        }
        Ok(())
    }
}

/// Position-error integrals, m s.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WaypointControllerState {
    pub integral: Vec3,
}

/// Output of the waypoint loop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AttitudeCommand {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Commanded down-axis acceleration, m/s^2 (positive = downward).
    pub down_accel: f64,
}

pub fn sat(x: f64, x_max: f64) -> f64 {
    x.clamp(-x_max, x_max)
}

/// Saturated PID on the NED position error `waypoint - position`.
///
/// A positive north error commands a negative (nose-down) pitch, which is the
/// direction that accelerates the airframe north under the thrust projection
/// used by the flight model. Yaw is held at `yaw_hold`. The integrals advance
/// by `dt` after the command is formed.
pub fn waypoint_control(
    state: &QuadState,
    waypoint: Vec3,
    ctrl: &mut WaypointControllerState,
    gains: &ControlGains,
    yaw_hold: f64,
    dt: f64,
) -> AttitudeCommand {
    let err = waypoint - state.position;
    let err_rate = -state.velocity;
    let pid = |e: f64, de: f64, ie: f64| gains.kp * e + gains.kd * de + gains.ki * ie;
    let i = ctrl.integral;

    let cmd = AttitudeCommand {
        roll: sat(pid(err.y, err_rate.y, i.y), gains.phi_max),
        pitch: sat(-pid(err.x, err_rate.x, i.x), gains.theta_max),
        yaw: yaw_hold,
        down_accel: pid(err.z, err_rate.z, i.z),
    };

    let next = i + err * dt;
    ctrl.integral = Vec3::new(
        sat(next.x, INTEGRAL_LIMIT),
        sat(next.y, INTEGRAL_LIMIT),
        sat(next.z, INTEGRAL_LIMIT),
    );
    cmd
}

/// Thrust and body torques from the attitude command.
///
/// The error derivatives treat the commanded angles as piecewise constant, so
/// `de_i/dt = -rate_i`.
pub fn attitude_control(
    state: &QuadState,
    desired: &AttitudeCommand,
    params: &QuadParams,
    gains: &ControlGains,
) -> Result<(f64, Vec3)> {
    let att = state.attitude;
    let rate = state.angular_rate;
    let tilt = att.x.cos() * att.y.cos();
    if tilt.abs() < GIMBAL_EPSILON {
        return Err(Error::NearGimbal(tilt.abs()));
    }
    let thrust = params.mass * (params.gravity - desired.down_accel) / tilt;

    let j = params.inertia;
    let e = Vec3::new(desired.roll - att.x, desired.pitch - att.y, desired.yaw - att.z);
    let de = -rate;
    let [k1, k2, k3] = gains.damping;
    let kp = gains.kp_att;
    let kd = gains.kd_att;
    let torques = Vec3::new(
        j.x * (-k1 * rate.x - (j.y - j.z) / j.x * rate.y * rate.z) + kp[0] * e.x + kd[0] * de.x,
        j.y * (-k2 * rate.y - (j.z - j.x) / j.y * rate.x * rate.z) + kp[1] * e.y + kd[1] * de.y,
        j.z * (-k3 * rate.z - (j.x - j.y) / j.z * rate.x * rate.y) + kp[2] * e.z + kd[2] * de.z,
    );
    Ok((thrust, torques))
}
