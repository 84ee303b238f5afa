use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Time-stamped wind samples, linearly interpolated and clamped at the ends.
#[derive(Clone, Debug, PartialEq)]
pub struct WindSignal {
    pub times: Vec<f64>,
    pub winds: Vec<Vec3>,
}

impl WindSignal {
    pub fn new(times: Vec<f64>, winds: Vec<Vec3>) -> Result<Self> {
        if times.is_empty() || times.len() != winds.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len().max(1),
                actual: winds.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
        Ok(Self { times, winds })
    }

    pub fn sample(&self, t: f64) -> Vec3 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return self.winds[0];
        }
        if i == self.times.len() {
            return self.winds[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let a = (t - t0) / (t1 - t0);
        self.winds[i - 1] * (1.0 - a) + self.winds[i] * a
    }

    /// Reads `t,wn,we,wd` rows; `#` lines are comments.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = crate::io::read_numeric_csv(path, &["t", "wn", "we", "wd"])?;
        let times = rows.iter().map(|r| r[0]).collect();
        let winds = rows.iter().map(|r| Vec3::new(r[1], r[2], r[3])).collect();
        Self::new(times, winds)
    }
}
