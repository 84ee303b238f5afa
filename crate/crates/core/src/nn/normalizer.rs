use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature `(x - mean) / max|x - mean|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    /// Fits over `rows`, each holding one value per named feature.
    pub fn fit<'a>(names: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let d = names.len();
        let mut sum = vec![0.0; d];
        let mut count = 0usize;
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        for r in &rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: r.len(),
                });
            }
            for (s, x) in sum.iter_mut().zip(r.iter()) {
                *s += x;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::LogTooShort { len: 0, needed: 1 });
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut scale = vec![0.0f64; d];
        for r in &rows {
            for j in 0..d {
                scale[j] = scale[j].max((r[j] - mean[j]).abs());
            }
        }
        for (j, s) in scale.iter().enumerate() {
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::DegenerateFeature(names[j].to_string()));
            }
        }
        Ok(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            mean,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn normalize_in_place(&self, x: &mut [f64]) {
        for ((x, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *x = (*x - m) / s;
        }
    }

    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.mean).zip(&self.scale).map(|((y, m), s)| y * s + m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_feature() {
        let rows = [[1.0], [2.0], [3.0]];
        let n = Normalizer::fit(&["x"], rows.iter().map(|r| &r[..])).unwrap();
        assert_eq!((n.mean[0], n.scale[0]), (2.0, 1.0));
        let out: Vec<f64> = rows.iter().map(|r| n.normalize(r)[0]).collect();
        assert_eq!(out, vec![-1.0, 0.0, 1.0]);
        assert_eq!(n.normalize(&[5.0]), vec![3.0]);
    }

    #[test]
    fn constant_feature_is_named() {
        let rows = [[1.0, 4.0], [2.0, 4.0]];
        match Normalizer::fit(&["a", "b"], rows.iter().map(|r| &r[..])) {
            Err(Error::DegenerateFeature(name)) => assert_eq!(name, "b"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_range(data in prop::collection::vec(prop::array::uniform2(-1e3..1e3f64), 2..50)) {
            prop_assume!(data.iter().any(|r| r[0] != data[0][0]) && data.iter().any(|r| r[1] != data[0][1]));
            let n = Normalizer::fit(&["a", "b"], data.iter().map(|r| &r[..])).unwrap();
            for r in &data {
                let z = n.normalize(r);
                prop_assert!(z.iter().all(|v| v.abs() <= 1.0 + 1e-12));
                let back = n.denormalize(&z);
                for j in 0..2 {
                    prop_assert!((back[j] - r[j]).abs() <= 1e-12 * r[j].abs().max(1.0));
                }
            }
        }
    }
}
