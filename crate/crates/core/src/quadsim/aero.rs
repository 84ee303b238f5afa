//! Airframe drag and rotor aerodynamic corrections.

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Horizontal airspeed below which the flapping direction is taken as zero.
pub const FLAPPING_EPSILON: f64 = 1e-9;

const INDUCED_MAX_ITER: usize = 50;
const INDUCED_TOL: f64 = 1e-10;
const INDUCED_DAMPING: f64 = 0.5;
/// Largest thrust amplification applied by the inflow correction.
pub const MAX_INFLOW_GAIN: f64 = 2.0;

/// Fitted drag coefficient (kg/m) as a function of airspeed magnitude.
///
/// The `1.1` cap never binds for non-negative airspeed (the exponential term
/// peaks near 0.32) but is kept as published.
pub fn drag_coefficient(airspeed: f64) -> f64 {
    (0.2 + 0.9 * (-0.6 * airspeed - 2.0).exp()).min(1.1)
}

/// Inertial-frame drag force `C_d (V_w - v) |V_w - v|`, applied identically on
/// all three axes.
pub fn drag_force(wind: Vec3, velocity: Vec3) -> Vec3 {
    let rel = wind - velocity;
    let speed = rel.norm();
    rel * (drag_coefficient(speed) * speed)
}

/// Hover induced velocity from actuator-disk momentum theory, `sqrt(T / (2 rho A))`.
pub fn momentum_theory_hover_velocity(rotor_thrust: f64, rotor_radius: f64, air_density: f64) -> f64 {
    let area = std::f64::consts::PI * rotor_radius * rotor_radius;
    (rotor_thrust / (2.0 * air_density * area)).sqrt()
}

/// Solves `v_i = v_h^2 / sqrt(u^2 + v^2 + (v_i + w)^2)` for the induced velocity.
///
/// `body_airspeed` is the air velocity relative to the vehicle in body axes.
/// A damped fixed-point iteration is tried first; bisection takes over if it
/// stalls.
pub fn induced_velocity(body_airspeed: Vec3, hover_induced_velocity: f64) -> Result<f64> {
    let vh2 = hover_induced_velocity * hover_induced_velocity;
    let h2 = body_airspeed.x * body_airspeed.x + body_airspeed.y * body_airspeed.y;
    let w = body_airspeed.z;
    let map = |vi: f64| vh2 / (h2 + (vi + w) * (vi + w)).sqrt();

    let mut vi = hover_induced_velocity;
    for _ in 0..INDUCED_MAX_ITER {
        let next = (1.0 - INDUCED_DAMPING) * vi + INDUCED_DAMPING * map(vi);
        if (next - vi).abs() < INDUCED_TOL {
            return Ok(next);
        }
        vi = next;
    }
    induced_velocity_bisection(h2, w, vh2)
}

fn induced_velocity_bisection(h2: f64, w: f64, vh2: f64) -> Result<f64> {
    let residual = |vi: f64| vi * (h2 + (vi + w) * (vi + w)).sqrt() - vh2;
    let mut hi = vh2.sqrt().max(1e-6);
    let mut grow = 0;
    while residual(hi) <= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NonConvergence {
                iterations: INDUCED_MAX_ITER,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < INDUCED_TOL {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectedThrust {
    pub thrust: f64,
    pub induced_velocity: f64,
}

/// Rotor thrust corrected for air-relative inflow, `T v_i / (v_i + w)`.
///
/// Upward flow through the rotor approaching the induced velocity drives the
/// vortex ring regime, which momentum theory does not describe; the gain
/// `v_i / (v_i + w)` is capped at [`MAX_INFLOW_GAIN`] there.
pub fn corrected_thrust(
    thrust: f64,
    body_airspeed: Vec3,
    hover_induced_velocity: f64,
) -> Result<CorrectedThrust> {
    let vi = induced_velocity(body_airspeed, hover_induced_velocity)?;
    let inflow = vi + body_airspeed.z;
    let gain = if inflow * MAX_INFLOW_GAIN <= vi {
        MAX_INFLOW_GAIN
    } else {
        vi / inflow
    };
    Ok(CorrectedThrust {
        thrust: thrust * gain,
        induced_velocity: vi,
    })
}

/// Rotor thrust vector in body axes after blade flapping.
///
/// The z component is the axial (lifting) magnitude; x and y tilt toward the
/// horizontal body airspeed `(u, v)`. Magnitude equals `thrust`.
pub fn blade_flapping(thrust: f64, u: f64, v: f64, flapping_coeff: f64) -> Vec3 {
    let horizontal = u.hypot(v);
    let alpha = flapping_coeff * horizontal;
    if horizontal < FLAPPING_EPSILON {
        return Vec3::new(0.0, 0.0, thrust * alpha.cos());
    }
    let (s, c) = alpha.sin_cos();
    Vec3::new(u / horizontal * s, v / horizontal * s, c) * thrust
}
