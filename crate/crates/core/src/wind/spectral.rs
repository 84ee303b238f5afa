//! Gust signals synthesised as sums of sinusoids sampled from a Dryden-type
//! spectrum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralParams {
    /// Intensity, m/s.
    pub sigma: f64,
    /// Scale length, m.
    pub length: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Number of harmonics N.
    pub bins: usize,
    /// Highest wavenumber, rad/m. Bins sit at `i * omega_max / N`, `i = 1..=N`.
    pub omega_max: f64,
}

impl SpectralParams {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::invalid("wind.bins", "need at least one bin"));
        }
        if !(self.b > 0.0 && self.c > 0.0) {
            return Err(Error::invalid("wind.shape", "b and c must be positive"));
        }
        if !(self.sigma >= 0.0 && self.length > 0.0 && self.omega_max > 0.0) {
            return Err(Error::invalid(
                "wind.spectral",
                "need sigma >= 0, length > 0, omega_max > 0",
            ));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        self.omega_max / self.bins as f64
    }
}

/// One-sided spectral density `sigma^2 (2L/pi) (1 + a (L W)^2) / (1 + b (L W)^2)^c`.
pub fn dryden_spectrum(params: &SpectralParams, omega: f64) -> f64 {
    let lw2 = (params.length * omega).powi(2);
    params.sigma.powi(2) * (2.0 * params.length / std::f64::consts::PI) * (1.0 + params.a * lw2)
        / (1.0 + params.b * lw2).powf(params.c)
}

/// `u(x) = u0 + sum_i a_i sin(W_i x + phi_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSignal {
    pub mean: f64,
    pub amplitudes: Vec<f64>,
    /// rad/m
    pub wavenumbers: Vec<f64>,
    pub phases: Vec<f64>,
}

impl SpectralSignal {
    pub fn at_position(&self, x: f64) -> f64 {
        self.mean
            + self
                .amplitudes
                .iter()
                .zip(&self.wavenumbers)
                .zip(&self.phases)
                .map(|((a, w), p)| a * (w * x + p).sin())
                .sum::<f64>()
    }

    /// Temporal signal under frozen turbulence, `omega_i = W_i * airspeed`.
    pub fn at_time(&self, t: f64, airspeed: f64) -> f64 {
        self.at_position(airspeed * t)
    }

    /// Variance of the signal over one period, `sum a_i^2 / 2`.
    pub fn variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>() / 2.0
    }

    /// Spatial period, m.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavenumbers[0]
    }
}

fn synth_with_rng(params: &SpectralParams, mean: f64, rng: &mut impl Rng) -> SpectralSignal {
    let dw = params.bin_width();
    let wavenumbers: Vec<f64> = (1..=params.bins).map(|i| i as f64 * dw).collect();
    let amplitudes = wavenumbers
        .iter()
        .map(|&w| (dw * dryden_spectrum(params, w)).sqrt())
        .collect();
    let phases = (0..params.bins)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    SpectralSignal {
        mean,
        amplitudes,
        wavenumbers,
        phases,
    }
}

/// Draws random phases for the harmonic series described by `params`.
pub fn synth_spectral_signal(params: &SpectralParams, mean: f64, seed: u64) -> Result<SpectralSignal> {
    params.validate()?;
    Ok(synth_with_rng(params, mean, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Three independent spectral signals replayed in time.
#[derive(Clone, Debug)]
pub struct SpectralWind {
    components: [SpectralSignal; 3],
    airspeed: f64,
}

impl SpectralWind {
    /// `params` holds the (north, east, down) component spectra.
    pub fn new(mean: Vec3, params: [SpectralParams; 3], airspeed: f64, seed: u64) -> Result<Self> {
        if !(airspeed > 0.0) {
            return Err(Error::invalid("wind.airspeed", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means = mean.to_array();
        let mut out = Vec::with_capacity(3);
        for (p, m) in params.iter().zip(means) {
            p.validate()?;
            out.push(synth_with_rng(p, m, &mut rng));
        }
        let components: [SpectralSignal; 3] = out.try_into().expect("three components");
        Ok(Self { components, airspeed })
    }

    pub fn sample(&self, t: f64) -> Vec3 {
        let [n, e, d] = &self.components;
        Vec3::new(
            n.at_time(t, self.airspeed),
            e.at_time(t, self.airspeed),
            d.at_time(t, self.airspeed),
        )
    }
}
