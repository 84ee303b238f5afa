//! Supervised datasets from flight logs, the LSTM training protocol and the
//! two wind estimators (LSTM and wind triangle).

mod dataset;
mod infer;
mod series;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Architecture};

pub use dataset::{build_sequences, read_dataset_csv, write_dataset_csv, Dataset, SequenceWindow};
pub use infer::{nn_estimate, wt_estimate, wt_airspeed};
pub use series::{read_estimate_csv, write_estimate_csv, EstimateSeries, Method, ESTIMATE_HEADER};
pub use train::{train, train_with_progress, EpochLoss, TrainOutcome};

/// Network inputs per time step.
pub const INPUT_FEATURES: [&str; 4] = ["pn", "pe", "phi", "theta"];
/// Extra inputs carried in autoregressive mode.
pub const FEEDBACK_FEATURES: [&str; 2] = ["wn_prev", "we_prev"];
/// Regression targets.
pub const TARGET_FEATURES: [&str; 2] = ["wn", "we"];

/// Training and windowing settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Upper bound on epochs; early stopping usually ends sooner.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub sequence_length: usize,
    pub stride: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub candidate: Activation,
    pub autoregressive: bool,
    pub relative_positions: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 10,
            learning_rate: 1e-3,
            seed: 0,
            sequence_length: 10,
            stride: 5,
            patience: 10,
            validation_fraction: 0.1,
            hidden: vec![100, 100],
            dropout: 0.1,
            candidate: Activation::Sigmoid,
            autoregressive: false,
            relative_positions: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("sequence_length", self.sequence_length),
            ("stride", self.stride),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.stride > self.sequence_length {
            return Err(Error::invalid(
                "stride",
                format!("{} exceeds sequence_length {}", self.stride, self.sequence_length),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation_fraction", "must lie in [0, 1)"));
        }
        self.architecture().validate()
    }

    pub fn input_dim(&self) -> usize {
        INPUT_FEATURES.len() + if self.autoregressive { FEEDBACK_FEATURES.len() } else { 0 }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.input_dim(),
            hidden: self.hidden.clone(),
            output_dim: TARGET_FEATURES.len(),
            dropout: self.dropout,
            candidate: self.candidate,
        }
    }

    pub fn features(&self) -> FeatureOptions {
        FeatureOptions {
            autoregressive: self.autoregressive,
            relative_positions: self.relative_positions,
        }
    }
}

/// How raw log samples become network input rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FeatureOptions {
    pub autoregressive: bool,
    pub relative_positions: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
        assert_eq!(TrainConfig::default().architecture().param_count(), 4 * 100 * 105 + 4 * 100 * 201 + 2 * 101);
    }

    #[test]
    fn stride_longer_than_window_is_rejected() {
        let cfg = TrainConfig {
            stride: 11,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { name: "stride", .. })));
    }
}
