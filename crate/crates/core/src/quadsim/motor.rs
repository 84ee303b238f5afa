//! Brushless motor model: third-order PWM-to-rate transfer function closed by
//! a PID rate loop.
//!
//! The plant `b0 / (a3 s^3 + a2 s^2 + a1 s + a0)` is realised in controllable
//! canonical form and integrated with RK4 at the simulation step, the PWM
//! command held over the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorConfig {
    /// `[a3, a2, a1, a0, b0]`
    pub plant: [f64; 5],
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// PWM pulse-width limits, microseconds.
    pub pwm_min: f64,
    pub pwm_max: f64,
    /// Plant input corresponding to `pwm_max`; `pwm_min` maps to zero.
    pub input_at_pwm_max: f64,
}

impl Default for MotorConfig {
    fn default() -> Self {
        Self {
            plant: [1.0, 189.5, 13412.0, 142834.0, 2057342.0],
            // Settles the 0 -> hover-rate step to +/-2% in under 0.2 s and
            // leaves about 60 degrees of phase margin in the attitude rate loops.
            kp: 1.5,
            ki: 12.0,
            kd: 0.008,
            pwm_min: 1000.0,
            pwm_max: 2000.0,
            input_at_pwm_max: 80.0,
        }
    }
}

impl MotorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.plant.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("motor.plant", "coefficients must be positive"));
        }
        if !(self.pwm_max > self.pwm_min) {
            return Err(Error::invalid("motor.pwm_max", "must exceed pwm_min"));
        }
        if !(self.input_at_pwm_max > 0.0) {
            return Err(Error::invalid("motor.input_at_pwm_max", "must be positive"));
        }
        if self.kp < 0.0 || self.ki <= 0.0 || self.kd < 0.0 {
            return Err(Error::invalid("motor.kp/ki/kd", "gains must be non-negative, ki positive"));
        }
        Ok(())
    }

    /// Open-loop steady-state gain `b0 / a0`, rad/s per unit input.
    pub fn dc_gain(&self) -> f64 {
        self.plant[4] / self.plant[3]
    }

    pub fn pwm_to_input(&self, pwm: f64) -> f64 {
        (pwm - self.pwm_min) / (self.pwm_max - self.pwm_min) * self.input_at_pwm_max
    }

    pub fn input_to_pwm(&self, input: f64) -> f64 {
        self.pwm_min + input / self.input_at_pwm_max * (self.pwm_max - self.pwm_min)
    }

    fn plant_derivative(&self, x: &[f64; 3], input: f64) -> [f64; 3] {
        let [a3, a2, a1, a0, _] = self.plant;
        [x[1], x[2], (input - a0 * x[0] - a1 * x[1] - a2 * x[2]) / a3]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MotorState {
    /// Controllable-canonical plant state.
    pub filter_state: [f64; 3],
    pub integral: f64,
    /// Rate at the previous step, for the derivative-on-measurement term.
    pub prev_rate: f64,
    /// Rotor angular rate, rad/s.
    pub rate: f64,
    /// Last PWM command, microseconds.
    pub pwm: f64,
}

impl MotorState {
    /// Motor spinning steadily at `rate` with the integrator holding the
    /// matching PWM.
    pub fn steady(rate: f64, cfg: &MotorConfig) -> Self {
        let input = rate / cfg.dc_gain();
        Self {
            filter_state: [rate / cfg.plant[4], 0.0, 0.0],
            integral: input / cfg.ki,
            prev_rate: rate,
            rate,
            pwm: cfg.input_to_pwm(input),
        }
    }
}

/// The four rotors, numbered as in the mixing matrix.
pub type RotorSet = [MotorState; 4];

/// Advances one motor by `dt` toward `desired_rate`.
pub fn motor_step(
    motor: &MotorState,
    desired_rate: f64,
    dt: f64,
    cfg: &MotorConfig,
) -> Result<MotorState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let error = desired_rate.max(0.0) - motor.rate;
    let derivative = -(motor.rate - motor.prev_rate) / dt;
    let tentative_integral = motor.integral + error * dt;
    let unclamped = cfg.kp * error + cfg.ki * tentative_integral + cfg.kd * derivative;
    let pwm_raw = cfg.input_to_pwm(unclamped);
    let pwm = pwm_raw.clamp(cfg.pwm_min, cfg.pwm_max);
    // Conditional integration: freeze the integrator while saturated.
    let integral = if pwm == pwm_raw {
        tentative_integral
    } else {
        motor.integral
    };
    let input = cfg.pwm_to_input(pwm);

    let x = motor.filter_state;
    let f = |s: &[f64; 3]| cfg.plant_derivative(s, input);
    let add = |s: &[f64; 3], k: &[f64; 3], h: f64| [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]];
    let k1 = f(&x);
    let k2 = f(&add(&x, &k1, 0.5 * dt));
    let k3 = f(&add(&x, &k2, 0.5 * dt));
    let k4 = f(&add(&x, &k3, dt));
    let mut next = [0.0; 3];
    for i in 0..3 {
        next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(MotorState {
        filter_state: next,
        integral,
        prev_rate: motor.rate,
        rate: (cfg.plant[4] * next[0]).max(0.0),
        pwm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_gain_of_published_plant() {
        let cfg = MotorConfig::default();
        assert!((cfg.dc_gain() - 2057342.0 / 142834.0).abs() < 1e-12);
        assert!((cfg.dc_gain() - 14.403).abs() < 1e-3);
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let cfg = MotorConfig::default();
        let mut m = MotorState::steady(271.2, &cfg);
        for _ in 0..1000 {
            m = motor_step(&m, 271.2, 1e-3, &cfg).unwrap();
        }
        assert!((m.rate - 271.2).abs() < 1e-9, "{}", m.rate);
    }

    #[test]
    fn rest_stays_at_rest() {
        let cfg = MotorConfig::default();
        let m = motor_step(&MotorState::default(), 0.0, 1e-3, &cfg).unwrap();
        assert_eq!(m.rate, 0.0);
    }

    #[test]
    fn rejects_non_positive_dt() {
        let cfg = MotorConfig::default();
        assert!(motor_step(&MotorState::default(), 100.0, 0.0, &cfg).is_err());
        assert!(motor_step(&MotorState::default(), 100.0, -1e-3, &cfg).is_err());
    }

    #[test]
    fn pwm_stays_within_limits() {
        let cfg = MotorConfig::default();
        let mut m = MotorState::default();
        for _ in 0..500 {
            m = motor_step(&m, 2000.0, 1e-3, &cfg).unwrap();
            assert!(m.pwm >= cfg.pwm_min && m.pwm <= cfg.pwm_max);
        }
    }

    #[test]
    fn step_to_hover_settles_quickly() {
        let cfg = MotorConfig::default();
        let target = 271.2;
        let dt = 1e-3;
        let mut m = MotorState::default();
        let mut last_outside = 0.0;
        for k in 1..=1000 {
            m = motor_step(&m, target, dt, &cfg).unwrap();
            if (m.rate - target).abs() > 0.02 * target {
                last_outside = k as f64 * dt;
            }
        }
        assert!(last_outside <= 0.2, "settled at {last_outside}");
    }
}
