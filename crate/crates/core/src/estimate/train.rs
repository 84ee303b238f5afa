use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, Matrix, Mode, Model, ModelMetadata, Network};

/// Windows per evaluation-mode forward pass.
const EVAL_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean training-mode batch loss over the epoch (dropout active).
    pub train: f64,
    /// Eval-mode loss on the validation windows.
    pub validation: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Model,
    pub history: Vec<EpochLoss>,
    pub best_epoch: usize,
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig, metadata: ModelMetadata) -> Result<TrainOutcome> {
    train_with_progress(dataset, cfg, metadata, |_| {})
}

/// Minibatch Adam on the batch-mean MSE with early stopping on the
/// validation loss. `progress` is called after every epoch.
pub fn train_with_progress(
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut metadata: ModelMetadata,
    mut progress: impl FnMut(&EpochLoss),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::LogTooShort {
            len: 0,
            needed: cfg.sequence_length,
        });
    }
    let inputs: Vec<Matrix> = (0..dataset.windows.len()).map(|i| dataset.normalized_inputs(i)).collect();
    if inputs[0].cols() != cfg.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.input_dim(),
            actual: inputs[0].cols(),
        });
    }
    let targets: Vec<[f64; 2]> = (0..dataset.windows.len()).map(|i| dataset.normalized_target(i)).collect();

    let mut net = Network::new(cfg.architecture(), cfg.seed)?;
    let mut adam = AdamState::new(net.params().len(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0F_7EA1);
    let mut order = dataset.train.clone();
    let monitor = if dataset.validation.is_empty() {
        &dataset.train
    } else {
        &dataset.validation
    };

    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, net.params().to_vec());
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let seqs: Vec<&Matrix> = batch.iter().map(|&i| &inputs[i]).collect();
            let tgt = batch_targets(&targets, batch)?;
            let mode = Mode::Train { seed: rng.random() };
            let (loss, grad) = net.loss_and_gradient(&seqs, &tgt, mode)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            adam_step(net.params_mut(), &grad, &mut adam)?;
            sum += loss;
            batches += 1;
        }
        let validation = eval_loss(&net, &inputs, &targets, monitor)?;
        let record = EpochLoss {
            epoch,
            train: sum / batches as f64,
            validation,
        };
        if !validation.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss: validation });
        }
        history.push(record);
        progress(&record);
        if validation < best.0 {
            best = (validation, epoch, net.params().to_vec());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }

    let (best_loss, best_epoch, params) = best;
    net.set_params(params)?;
    metadata.sequence_length = cfg.sequence_length;
    metadata.autoregressive = cfg.autoregressive;
    metadata.relative_positions = cfg.relative_positions;
    metadata.epochs_trained = history.len();
    metadata.best_validation_loss = best_loss;
    metadata.seed = cfg.seed;
    Ok(TrainOutcome {
        model: Model {
            network: net,
            input_norm: dataset.input_norm.clone(),
            target_norm: dataset.target_norm.clone(),
            metadata,
        },
        history,
        best_epoch,
    })
}

fn batch_targets(targets: &[[f64; 2]], batch: &[usize]) -> Result<Matrix> {
    Matrix::from_vec(batch.len(), 2, batch.iter().flat_map(|&i| targets[i]).collect())
}

/// Window-weighted mean eval-mode MSE over `indices`.
fn eval_loss(net: &Network, inputs: &[Matrix], targets: &[[f64; 2]], indices: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for chunk in indices.chunks(EVAL_CHUNK) {
        let seqs: Vec<&Matrix> = chunk.iter().map(|&i| &inputs[i]).collect();
        total += net.loss(&seqs, &batch_targets(targets, chunk)?, Mode::Eval)? * chunk.len() as f64;
    }
    Ok(total / indices.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::SequenceWindow;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 300,
            batch_size: 4,
            learning_rate: 0.01,
            sequence_length: 3,
            stride: 1,
            patience: 300,
            hidden: vec![6],
            dropout: 0.0,
            validation_fraction: 0.0,
            ..Default::default()
        }
    }

    fn repeated_windows() -> Vec<SequenceWindow> {
        let a = Matrix::from_vec(3, 4, vec![0.0, 1.0, 0.1, 0.2, 1.0, 2.0, 0.0, 0.1, 2.0, 0.0, -0.1, 0.0]).unwrap();
        let b = Matrix::from_vec(3, 4, vec![1.0, 0.0, -0.2, 0.1, 0.0, 1.0, 0.1, 0.0, 1.0, 2.0, 0.2, -0.1]).unwrap();
        (0..12)
            .map(|k| SequenceWindow {
                inputs: if k % 2 == 0 { a.clone() } else { b.clone() },
                target: if k % 2 == 0 { [1.0, -2.0] } else { [3.0, 0.5] },
                end_time: k as f64,
            })
            .collect()
    }

    #[test]
    fn memorizes_repeated_windows() {
        let cfg = small_cfg();
        let ds = Dataset::from_windows(repeated_windows(), &cfg).unwrap();
        let out = train(&ds, &cfg, ModelMetadata::default()).unwrap();
        let first = out.history[0].train;
        let last = out.history.last().unwrap().validation;
        assert!(last < 1e-4 && last < first * 1e-3, "{first} -> {last}");
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            epochs: 5,
            dropout: 0.2,
            validation_fraction: 0.25,
            hidden: vec![5, 4],
            ..small_cfg()
        };
        let ds = Dataset::from_windows(repeated_windows(), &cfg).unwrap();
        let a = train(&ds, &cfg, ModelMetadata::default()).unwrap();
        let b = train(&ds, &cfg, ModelMetadata::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn early_stopping_restores_best_epoch() {
        let cfg = TrainConfig {
            epochs: 200,
            patience: 3,
            learning_rate: 0.5,
            validation_fraction: 0.25,
            ..small_cfg()
        };
        let ds = Dataset::from_windows(repeated_windows(), &cfg).unwrap();
        match train(&ds, &cfg, ModelMetadata::default()) {
            Ok(out) => {
                let best = out.history.iter().map(|e| e.validation).fold(f64::INFINITY, f64::min);
                assert_eq!(out.model.metadata.best_validation_loss, best);
                assert_eq!(out.history[out.best_epoch - 1].validation, best);
                assert!(out.history.len() - out.best_epoch <= 3);
            }
            Err(Error::TrainingDiverged { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn non_finite_loss_aborts() {
        let cfg = small_cfg();
        let mut windows = repeated_windows();
        windows[0].target = [f64::NAN, 0.0];
        windows[1].target = [f64::INFINITY, 1.0];
        let ds = Dataset::from_windows(windows, &cfg);
        // The normalizer rejects the infinite spread, or training notices.
        match ds {
            Err(Error::DegenerateFeature(_)) => {}
            Ok(ds) => assert!(matches!(
                train(&ds, &cfg, ModelMetadata::default()),
                Err(Error::TrainingDiverged { epoch: 1, .. })
            )),
            Err(e) => panic!("{e}"),
        }
    }
}
