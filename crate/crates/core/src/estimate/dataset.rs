use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureOptions, TrainConfig, FEEDBACK_FEATURES, INPUT_FEATURES, TARGET_FEATURES};
use crate::error::{Error, Result};
use crate::io::{CsvOut, Provenance};
use crate::nn::{Matrix, Normalizer};
use crate::quadsim::TrajectoryLog;

/// Tolerance on log sample spacing, s.
pub(crate) const TIMESTAMP_TOL: f64 = 1e-6;

/// One supervised example: `n` raw input rows and the wind at the last row.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceWindow {
    /// `n x d` raw features, oldest row first.
    pub inputs: Matrix,
    pub target: [f64; 2],
    pub end_time: f64,
}

/// Raw feature rows of a log, one per sample.
pub(crate) fn feature_rows(log: &TrajectoryLog) -> Vec<[f64; 4]> {
    log.samples
        .iter()
        .map(|s| [s.position.x, s.position.y, s.attitude.x, s.attitude.y])
        .collect()
}

/// Builds the window ending at sample `end` (inclusive). `feedback[k]` is the
/// wind fed back on row `k`, used only in autoregressive mode.
pub(crate) fn window_inputs(rows: &[[f64; 4]], feedback: &[[f64; 2]], end: usize, n: usize, opts: FeatureOptions) -> Matrix {
    let d = INPUT_FEATURES.len() + if opts.autoregressive { FEEDBACK_FEATURES.len() } else { 0 };
    let start = end + 1 - n;
    let (rn, re) = if opts.relative_positions {
        (rows[end][0], rows[end][1])
    } else {
        (0.0, 0.0)
    };
    let mut m = Matrix::zeros(n, d);
    for (j, k) in (start..=end).enumerate() {
        let r = m.row_mut(j);
        r[0] = rows[k][0] - rn;
        r[1] = rows[k][1] - re;
        r[2] = rows[k][2];
        r[3] = rows[k][3];
        if opts.autoregressive {
            r[4] = feedback[k][0];
            r[5] = feedback[k][1];
        }
    }
    m
}

/// Cuts a log into windows of `n` samples starting at 0, `stride`, ...
///
/// The target of each window is the true horizontal wind at its last sample.
/// In autoregressive mode the feedback columns carry the true wind of the
/// preceding sample.
pub fn build_sequences(log: &TrajectoryLog, n: usize, stride: usize, opts: FeatureOptions) -> Result<Vec<SequenceWindow>> {
    if n == 0 || stride == 0 {
        return Err(Error::invalid("sequence_length", "length and stride must be positive"));
    }
    if log.len() < n {
        return Err(Error::LogTooShort {
            len: log.len(),
            needed: n,
        });
    }
    if log.len() > 1 {
        log.check_regular(TIMESTAMP_TOL)?;
    }
    let rows = feature_rows(log);
    let feedback: Vec<[f64; 2]> = (0..log.len())
        .map(|k| {
            let w = log.samples[k.saturating_sub(1)].wind;
            [w.x, w.y]
        })
        .collect();
    Ok((0..=(log.len() - n) / stride)
        .map(|w| {
            let end = w * stride + n - 1;
            let s = &log.samples[end];
            SequenceWindow {
                inputs: window_inputs(&rows, &feedback, end, n, opts),
                target: [s.wind.x, s.wind.y],
                end_time: s.t,
            }
        })
        .collect())
}

/// Windows with a seeded train/validation split and normalizers fitted on
/// the training part.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub windows: Vec<SequenceWindow>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
    pub sequence_length: usize,
    pub options: FeatureOptions,
}

impl Dataset {
    /// Windows every log with the configured length and stride. Windows never
    /// straddle two logs.
    pub fn from_logs(logs: &[&TrajectoryLog], cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut windows = Vec::new();
        for log in logs {
            windows.extend(build_sequences(log, cfg.sequence_length, cfg.stride, cfg.features())?);
        }
        Self::from_windows(windows, cfg)
    }

    /// Splits `windows` and fits the normalizers.
    pub fn from_windows(windows: Vec<SequenceWindow>, cfg: &TrainConfig) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::LogTooShort {
                len: 0,
                needed: cfg.sequence_length,
            });
        }
        let mut order: Vec<usize> = (0..windows.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        let n_val = if windows.len() > 1 {
            ((windows.len() as f64 * cfg.validation_fraction).round() as usize).min(windows.len() - 1)
        } else {
            0
        };
        let mut validation = order[..n_val].to_vec();
        let mut train = order[n_val..].to_vec();
        validation.sort_unstable();
        train.sort_unstable();

        let input_norm = Normalizer::fit(
            &INPUT_FEATURES,
            train.iter().flat_map(|&i| {
                let m = &windows[i].inputs;
                (0..m.rows()).map(move |r| &m.row(r)[..INPUT_FEATURES.len()])
            }),
        )?;
        let target_norm = Normalizer::fit(&TARGET_FEATURES, train.iter().map(|&i| &windows[i].target[..]))?;
        Ok(Self {
            sequence_length: windows[0].inputs.rows(),
            options: cfg.features(),
            windows,
            train,
            validation,
            input_norm,
            target_norm,
        })
    }

    /// Normalized copy of a window's inputs.
    pub fn normalized_inputs(&self, index: usize) -> Matrix {
        normalize_window(&self.windows[index].inputs, &self.input_norm, &self.target_norm)
    }

    pub fn normalized_target(&self, index: usize) -> [f64; 2] {
        let t = self.target_norm.normalize(&self.windows[index].target);
        [t[0], t[1]]
    }
}

/// Applies the input normalizer to the first four columns and the target
/// normalizer to feedback columns, if any.
pub(crate) fn normalize_window(raw: &Matrix, input: &Normalizer, target: &Normalizer) -> Matrix {
    let mut m = raw.clone();
    let k = input.dim();
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        input.normalize_in_place(&mut row[..k]);
        if row.len() > k {
            target.normalize_in_place(&mut row[k..]);
        }
    }
    m
}

fn dataset_header(n: usize, d: usize) -> Vec<String> {
    let mut names: Vec<String> = ["split", "t_end", "wn", "we"].iter().map(|s| s.to_string()).collect();
    let features: Vec<&str> = INPUT_FEATURES.iter().chain(FEEDBACK_FEATURES.iter()).take(d).copied().collect();
    for k in 0..n {
        for f in &features {
            names.push(format!("{f}_{k}"));
        }
    }
    names
}

/// One row per window: split (0 train, 1 validation), end time, target and
/// the flattened raw inputs. Normalizers are refitted on load.
pub fn write_dataset_csv(ds: &Dataset, path: &Path, provenance: &Provenance) -> Result<()> {
    let n = ds.sequence_length;
    let d = ds.windows[0].inputs.cols();
    let header = dataset_header(n, d);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::create(path, provenance, &header_refs)?;
    let mut is_val = vec![false; ds.windows.len()];
    for &i in &ds.validation {
        is_val[i] = true;
    }
    for (i, w) in ds.windows.iter().enumerate() {
        let mut row = vec![f64::from(u8::from(is_val[i])), w.end_time, w.target[0], w.target[1]];
        row.extend_from_slice(w.inputs.as_slice());
        out.row(&row)?;
    }
    out.finish()
}

/// Reads a dataset written by [`write_dataset_csv`]. `cfg` supplies the
/// feature options; its sequence length must match the file.
pub fn read_dataset_csv(path: &Path, cfg: &TrainConfig) -> Result<Dataset> {
    let n = cfg.sequence_length;
    let d = cfg.input_dim();
    let header = dataset_header(n, d);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = crate::io::read_numeric_csv(path, &header_refs)?;
    let mut windows = Vec::with_capacity(rows.len());
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for (i, r) in rows.into_iter().enumerate() {
        if r[0] != 0.0 {
            validation.push(i);
        } else {
            train.push(i);
        }
        windows.push(SequenceWindow {
            end_time: r[1],
            target: [r[2], r[3]],
            inputs: Matrix::from_vec(n, d, r[4..].to_vec())?,
        });
    }
    if windows.is_empty() || train.is_empty() {
        return Err(Error::LogTooShort { len: 0, needed: n });
    }
    let input_norm = Normalizer::fit(
        &INPUT_FEATURES,
        train.iter().flat_map(|&i| {
            let m = &windows[i].inputs;
            (0..m.rows()).map(move |r| &m.row(r)[..INPUT_FEATURES.len()])
        }),
    )?;
    let target_norm = Normalizer::fit(&TARGET_FEATURES, train.iter().map(|&i| &windows[i].target[..]))?;
    Ok(Dataset {
        windows,
        train,
        validation,
        input_norm,
        target_norm,
        sequence_length: n,
        options: cfg.features(),
    })
}
