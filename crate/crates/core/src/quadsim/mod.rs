//! Quadcopter flight model: rigid body, motors, rotor aerodynamics and drag.
//!
//! Everything is expressed in the north-east-down (NED) inertial frame with
//! Z-Y-X Euler angles. The rotational equations treat Euler-angle rates as the
//! body rates, which is the usual small-angle quadcopter simplification.

mod aero;
mod dynamics;
mod motor;
mod sim;

use serde::{Deserialize, Serialize};

pub use aero::{
    blade_flapping, corrected_thrust, drag_coefficient, drag_force, induced_velocity,
    momentum_theory_hover_velocity, CorrectedThrust, FLAPPING_EPSILON, MAX_INFLOW_GAIN,
};
pub use dynamics::{
    allocate_rotors, integrate_rigid_body, mix_rotors, rigid_body_derivative, Allocation,
    Integrator,
};
pub use motor::{motor_step, MotorConfig, MotorState, RotorSet};
pub use sim::{simulate, LogSample, SimConfig, TrajectoryLog};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Air density used to derive the default hover induced velocity (kg/m^3).
pub const AIR_DENSITY: f64 = 1.225;
/// Rotor radius assumed for the default hover induced velocity (m).
pub const ROTOR_RADIUS: f64 = 0.12;

/// Physical parameters of the airframe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadParams {
    /// kg
    pub mass: f64,
    /// Diagonal of the inertia matrix, kg m^2.
    pub inertia: Vec3,
    /// m
    pub arm_length: f64,
    /// Thrust per squared rotor rate, N s^2.
    pub thrust_coeff: f64,
    /// Reaction torque per squared rotor rate, N m s^2.
    pub torque_coeff: f64,
    /// Blade flapping angle per unit horizontal airspeed, rad s / m.
    pub flapping_coeff: f64,
    /// m/s^2
    pub gravity: f64,
    /// Rotor induced velocity in hover, m/s.
    pub hover_induced_velocity: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            mass: 1.5,
            inertia: Vec3::new(0.0348, 0.0459, 0.0977),
            arm_length: 0.235,
            thrust_coeff: 5e-5,
            torque_coeff: 5e-5,
            flapping_coeff: 0.003,
            gravity: 9.81,
            // momentum_theory_hover_velocity(1.5 * 9.81 / 4, ROTOR_RADIUS, AIR_DENSITY)
            hover_induced_velocity: 5.761_172_950_867_05,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64); 10] = [
            ("mass", self.mass),
            ("inertia.x", self.inertia.x),
            ("inertia.y", self.inertia.y),
            ("inertia.z", self.inertia.z),
            ("arm_length", self.arm_length),
            ("thrust_coeff", self.thrust_coeff),
            ("torque_coeff", self.torque_coeff),
            ("flapping_coeff", self.flapping_coeff),
            ("gravity", self.gravity),
            ("hover_induced_velocity", self.hover_induced_velocity),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Rotor rate at which four rotors carry the vehicle weight, rad/s.
    pub fn hover_rotor_rate(&self) -> f64 {
        (self.weight() / (4.0 * self.thrust_coeff)).sqrt()
    }
}

/// Rigid-body state. Also used for its own time derivative, in which case
/// each field holds the rate of the corresponding quantity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    /// NED position, m.
    pub position: Vec3,
    /// NED ground velocity, m/s.
    pub velocity: Vec3,
    /// Roll, pitch, yaw, rad.
    pub attitude: Vec3,
    /// Euler-angle rates, rad/s.
    pub angular_rate: Vec3,
}

impl QuadState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            ..Self::default()
        }
    }

    /// `self + k * rate`
    pub fn advanced(&self, rate: &QuadState, k: f64) -> QuadState {
        QuadState {
            position: self.position + rate.position * k,
            velocity: self.velocity + rate.velocity * k,
            attitude: self.attitude + rate.attitude * k,
            angular_rate: self.angular_rate + rate.angular_rate * k,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.attitude.is_finite()
            && self.angular_rate.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.position
            .max_abs()
            .max(self.velocity.max_abs())
            .max(self.attitude.max_abs())
            .max(self.angular_rate.max_abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_valid() {
        QuadParams::default().validate().unwrap();
    }

    #[test]
    fn default_hover_induced_velocity_matches_momentum_theory() {
        let p = QuadParams::default();
        let vh = momentum_theory_hover_velocity(p.weight() / 4.0, ROTOR_RADIUS, AIR_DENSITY);
        assert!((vh - p.hover_induced_velocity).abs() < 1e-12, "{vh}");
    }

    #[test]
    fn hover_rate_from_table_values() {
        // 4 k1 w^2 = m g  =>  w^2 = 73575
        let p = QuadParams::default();
        assert!((p.hover_rotor_rate().powi(2) - 73_575.0).abs() < 1e-9);
        assert!((p.hover_rotor_rate() - 271.247).abs() < 1e-3);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        let p = QuadParams {
            mass: 0.0,
            ..QuadParams::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "mass", .. })
        ));
    }
}
