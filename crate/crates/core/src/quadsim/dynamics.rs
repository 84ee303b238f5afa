use serde::{Deserialize, Serialize};

use super::aero::drag_force;
use super::{QuadParams, QuadState};
use crate::math::{Rotation, Vec3};

/// Fixed-step integration scheme for the rigid body.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// Time derivative of the rigid-body state.
///
/// `thrust_body` is the total rotor thrust vector in body axes with its z
/// component measured along the rotor axis (positive = lifting), so a level
/// hover has `thrust_body = (0, 0, m g)`.
pub fn rigid_body_derivative(
    state: &QuadState,
    thrust_body: Vec3,
    torques: Vec3,
    wind: Vec3,
    params: &QuadParams,
) -> QuadState {
    let m = params.mass;
    let rot = Rotation::from_euler(state.attitude);
    let force_body = Vec3::new(thrust_body.x, thrust_body.y, -thrust_body.z);
    let accel = Vec3::E3 * params.gravity
        + rot.apply(force_body) / m
        + drag_force(wind, state.velocity) / m;

    let j = params.inertia;
    let r = state.angular_rate;
    let angular_accel = Vec3::new(
        (j.y - j.z) / j.x * r.y * r.z + torques.x / j.x,
        (j.z - j.x) / j.y * r.x * r.z + torques.y / j.y,
        (j.x - j.y) / j.z * r.x * r.y + torques.z / j.z,
    );

    QuadState {
        position: state.velocity,
        velocity: accel,
        attitude: state.angular_rate,
        angular_rate: angular_accel,
    }
}

/// Advances the rigid body by `dt` with thrust, torque and wind held constant.
pub fn integrate_rigid_body(
    state: &QuadState,
    thrust_body: Vec3,
    torques: Vec3,
    wind: Vec3,
    params: &QuadParams,
    dt: f64,
    method: Integrator,
) -> QuadState {
    let f = |s: &QuadState| rigid_body_derivative(s, thrust_body, torques, wind, params);
    match method {
        Integrator::Euler => state.advanced(&f(state), dt),
        Integrator::Rk4 => {
            let k1 = f(state);
            let k2 = f(&state.advanced(&k1, 0.5 * dt));
            let k3 = f(&state.advanced(&k2, 0.5 * dt));
            let k4 = f(&state.advanced(&k3, dt));
            let mut out = state.advanced(&k1, dt / 6.0);
            out = out.advanced(&k2, dt / 3.0);
            out = out.advanced(&k3, dt / 3.0);
            out.advanced(&k4, dt / 6.0)
        }
    }
}

/// Rotor mixing: squared rotor rates to total thrust and body torques.
pub fn mix_rotors(omega_sq: [f64; 4], params: &QuadParams) -> (f64, Vec3) {
    let k1 = params.thrust_coeff;
    let k2 = params.torque_coeff;
    let l = params.arm_length;
    let [w1, w2, w3, w4] = omega_sq;
    let thrust = k1 * (w1 + w2 + w3 + w4);
    let torques = Vec3::new(
        l * k1 * (w4 - w2),
        l * k1 * (w1 - w3),
        k2 * (-w1 + w2 - w3 + w4),
    );
    (thrust, torques)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    /// Squared rotor rates, clamped at zero.
    pub omega_sq: [f64; 4],
    /// True when at least one rotor would have needed a negative squared rate.
    pub saturated: bool,
}

impl Allocation {
    pub fn rotor_rates(&self) -> [f64; 4] {
        self.omega_sq.map(f64::sqrt)
    }
}

/// Inverse of [`mix_rotors`].
pub fn allocate_rotors(thrust: f64, torques: Vec3, params: &QuadParams) -> Allocation {
    let lk1 = params.arm_length * params.thrust_coeff;
    let sum = thrust / params.thrust_coeff;
    let roll = torques.x / lk1;
    let pitch = torques.y / lk1;
    let yaw = torques.z / params.torque_coeff;
    let odd = 0.5 * (sum - yaw);
    let even = 0.5 * (sum + yaw);
    let raw = [
        0.5 * (odd + pitch),
        0.5 * (even - roll),
        0.5 * (odd - pitch),
        0.5 * (even + roll),
    ];
    let saturated = raw.iter().any(|&w| w < 0.0);
    Allocation {
        omega_sq: raw.map(|w| w.max(0.0)),
        saturated,
    }
}
