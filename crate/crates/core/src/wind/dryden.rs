//! Dryden gust filters driven by discrete white noise.
//!
//! Continuous transfer functions (V = nominal airspeed):
//!
//! ```text
//! H_u(s) = sigma_u sqrt(2V/L_u) / (s + V/L_u)
//! H_v(s) = sigma_v sqrt(3V/L_v) (s + V/(sqrt(3) L_v)) / (s + V/L_v)^2
//! ```
//!
//! with `H_w` of the same form as `H_v`. Each is discretised with the
//! bilinear transform at `update_dt` and driven by `N(0,1)/sqrt(update_dt)`
//! so the output variance does not depend on the step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrydenParams {
    /// Intensities (u, v, w), m/s.
    pub sigma: Vec3,
    /// Scale lengths (u, v, w), m.
    pub length: Vec3,
    /// Nominal airspeed, m/s.
    pub airspeed: f64,
    /// Filter update interval, s.
    pub update_dt: f64,
}

impl Default for DrydenParams {
    fn default() -> Self {
        Self {
            sigma: Vec3::new(1.06, 1.06, 0.7),
            length: Vec3::new(200.0, 200.0, 200.0),
            airspeed: 5.0,
            update_dt: 1e-3,
        }
    }
}

impl DrydenParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.to_array().iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("wind.sigma", "must be finite and non-negative"));
        }
        if self.length.to_array().iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("wind.length", "must be positive"));
        }
        if !(self.airspeed > 0.0 && self.airspeed.is_finite()) {
            return Err(Error::invalid(
                "wind.airspeed",
                format!("must be positive, got {} (the filters degenerate at zero)", self.airspeed),
            ));
        }
        if !(self.update_dt > 0.0 && self.update_dt.is_finite()) {
            return Err(Error::invalid("wind.update_dt", "must be positive"));
        }
        Ok(())
    }
}

/// First-order section `b0 / (s + a0)` after the bilinear transform.
#[derive(Clone, Copy, Debug)]
struct FirstOrder {
    n0: f64,
    n1: f64,
    d1: f64,
    state: f64,
}

impl FirstOrder {
    fn tustin(b0: f64, a0: f64, dt: f64) -> Self {
        let k = 2.0 / dt;
        let d0 = k + a0;
        Self {
            n0: b0 / d0,
            n1: b0 / d0,
            d1: (a0 - k) / d0,
            state: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.n0 * x + self.state;
        self.state = self.n1 * x - self.d1 * y;
        y
    }
}

/// Second-order section `(b1 s + b0) / (s^2 + a1 s + a0)` after the bilinear
/// transform, transposed direct form II.
#[derive(Clone, Copy, Debug)]
struct Biquad {
    n: [f64; 3],
    d: [f64; 2],
    state: [f64; 2],
}

impl Biquad {
    fn tustin(b1: f64, b0: f64, a1: f64, a0: f64, dt: f64) -> Self {
        let k = 2.0 / dt;
        let k2 = k * k;
        let d0 = k2 + a1 * k + a0;
        Self {
            n: [(b1 * k + b0) / d0, 2.0 * b0 / d0, (b0 - b1 * k) / d0],
            d: [(2.0 * a0 - 2.0 * k2) / d0, (k2 - a1 * k + a0) / d0],
            state: [0.0; 2],
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.n[0] * x + self.state[0];
        self.state[0] = self.n[1] * x - self.d[0] * y + self.state[1];
        self.state[1] = self.n[2] * x - self.d[1] * y;
        y
    }
}

/// Discretised Dryden filters for the three gust components.
#[derive(Clone, Debug)]
pub struct DrydenFilter {
    u: FirstOrder,
    v: Biquad,
    w: Biquad,
    noise_scale: f64,
    dt: f64,
}

impl DrydenFilter {
    pub fn new(params: &DrydenParams) -> Result<Self> {
        params.validate()?;
        let dt = params.update_dt;
        let va = params.airspeed;
        let transverse = |sigma: f64, l: f64| {
            let gain = sigma * (3.0 * va / l).sqrt();
            let p = va / l;
            Biquad::tustin(gain, gain * p / 3f64.sqrt(), 2.0 * p, p * p, dt)
        };
        let (s, l) = (params.sigma, params.length);
        Ok(Self {
            u: FirstOrder::tustin(s.x * (2.0 * va / l.x).sqrt(), va / l.x, dt),
            v: transverse(s.y, l.y),
            w: transverse(s.z, l.z),
            noise_scale: 1.0 / dt.sqrt(),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances all filters by one update with standard-normal `noise`,
    /// returning the gust fluctuation mapped u -> north, v -> east, w -> down.
    pub fn step(&mut self, noise: [f64; 3]) -> Vec3 {
        let s = self.noise_scale;
        Vec3::new(
            self.u.step(noise[0] * s),
            self.v.step(noise[1] * s),
            self.w.step(noise[2] * s),
        )
    }
}

/// One filter update; see [`DrydenFilter::step`].
pub fn dryden_step(filter: &mut DrydenFilter, noise: [f64; 3]) -> Vec3 {
    filter.step(noise)
}

/// Mean wind plus Dryden fluctuation, held between filter updates.
#[derive(Clone, Debug)]
pub struct DrydenWind {
    mean: Vec3,
    filter: DrydenFilter,
    rng: ChaCha8Rng,
    updates: u64,
    current: Vec3,
}

impl DrydenWind {
    pub fn new(mean: Vec3, params: DrydenParams, seed: u64) -> Result<Self> {
        Ok(Self {
            mean,
            filter: DrydenFilter::new(&params)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            updates: 0,
            current: mean,
        })
    }

    pub fn mean(&self) -> Vec3 {
        self.mean
    }

    /// Draws noise and advances one update.
    pub fn advance(&mut self) -> Vec3 {
        let noise: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut self.rng));
        self.updates += 1;
        self.current = self.mean + self.filter.step(noise);
        self.current
    }

    /// Wind at time `t`: updates are applied at `k * update_dt`, `k >= 1`.
    /// Time must not run backwards.
    pub fn sample(&mut self, t: f64) -> Vec3 {
        let target = (t / self.filter.dt + 1e-9).floor().max(0.0) as u64;
        while self.updates < target {
            self.advance();
        }
        self.current
    }
}
