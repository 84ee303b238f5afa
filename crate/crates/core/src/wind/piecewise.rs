use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindSegment {
    /// Segment start, s.
    pub start: f64,
    pub wind: Vec3,
}

/// Random horizontal wind held constant over random-length segments.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstantWind {
    segments: Vec<WindSegment>,
}

impl PiecewiseConstantWind {
    pub fn segments(&self) -> &[WindSegment] {
        &self.segments
    }

    /// Times at which the wind jumps, excluding the start.
    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    /// Wind in force at `t`; the last segment extends indefinitely and the
    /// first covers negative times.
    pub fn sample(&self, t: f64) -> Vec3 {
        let idx = self.segments.partition_point(|s| s.start <= t);
        self.segments[idx.saturating_sub(1)].wind
    }
}

/// Draws segments covering `[0, duration)`. Lengths are uniform on
/// `(interval[0], interval[1]]`; north and east are uniform on `amplitude`.
pub fn piecewise_constant_wind(
    seed: u64,
    amplitude: [f64; 2],
    interval: [f64; 2],
    duration: f64,
) -> Result<PiecewiseConstantWind> {
    if !(duration > 0.0) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    if !(interval[0] >= 0.0 && interval[1] > interval[0]) {
        return Err(Error::invalid("wind.interval", "need 0 <= lo < hi"));
    }
    if !(amplitude[0] <= amplitude[1]) {
        return Err(Error::invalid("wind.amplitude", "lower bound exceeds upper"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        if amplitude[0] == amplitude[1] {
            amplitude[0]
        } else {
            rng.random_range(amplitude[0]..=amplitude[1])
        }
    };
    let mut segments = Vec::new();
    let mut start = 0.0;
    while start < duration {
        let wind = Vec3::new(draw(&mut rng), draw(&mut rng), 0.0);
        segments.push(WindSegment { start, wind });
        let u: f64 = rng.random();
        start += interval[0] + (interval[1] - interval[0]) * (1.0 - u);
    }
    Ok(PiecewiseConstantWind { segments })
}
