use super::dataset::{feature_rows, normalize_window, window_inputs, TIMESTAMP_TOL};
use super::{EstimateSeries, FeatureOptions, Method, INPUT_FEATURES};
use crate::error::{Error, Result};
use crate::math::{Rotation, Vec3};
use crate::nn::{Matrix, Model};
use crate::quadsim::{drag_coefficient, QuadParams, TrajectoryLog};

/// Windows per batched inference call.
const INFER_CHUNK: usize = 512;

fn truth_of(log: &TrajectoryLog) -> (Vec<f64>, Vec<[f64; 2]>) {
    log.samples.iter().map(|s| (s.t, [s.wind.x, s.wind.y])).unzip()
}

/// LSTM estimate at every sample from the trailing window (stride 1). The
/// first `n - 1` samples are warm-up and carry NaN.
///
/// `trajectory` names the kind of flight in `log`; it must match the model's
/// training trajectory when given.
pub fn nn_estimate(model: &Model, log: &TrajectoryLog, trajectory: Option<&str>) -> Result<EstimateSeries> {
    let meta = &model.metadata;
    if let Some(requested) = trajectory {
        if requested != meta.trajectory {
            return Err(Error::TrajectoryMismatch {
                trained: meta.trajectory.clone(),
                requested: requested.to_string(),
            });
        }
    }
    if model.input_norm.dim() != INPUT_FEATURES.len() {
        return Err(Error::DimensionMismatch {
            expected: INPUT_FEATURES.len(),
            actual: model.input_norm.dim(),
        });
    }
    let n = meta.sequence_length;
    if n == 0 || log.len() < n {
        return Err(Error::LogTooShort {
            len: log.len(),
            needed: n.max(1),
        });
    }
    if log.len() > 1 {
        log.check_regular(TIMESTAMP_TOL)?;
    }
    let opts = FeatureOptions {
        autoregressive: meta.autoregressive,
        relative_positions: meta.relative_positions,
    };
    let rows = feature_rows(log);
    let (t, truth) = truth_of(log);
    let mut estimate = vec![[f64::NAN; 2]; log.len()];
    let norm = |raw: &Matrix| normalize_window(raw, &model.input_norm, &model.target_norm);

    if opts.autoregressive {
        // Feedback starts from the training mean and then follows the
        // network's own previous output.
        let start = [model.target_norm.mean[0], model.target_norm.mean[1]];
        let mut feedback = vec![start; log.len()];
        for end in n - 1..log.len() {
            let x = norm(&window_inputs(&rows, &feedback, end, n, opts));
            let y = model.network.predict(&[&x])?;
            let w = model.target_norm.denormalize(y.row(0));
            estimate[end] = [w[0], w[1]];
            if end + 1 < log.len() {
                feedback[end + 1] = estimate[end];
            }
        }
    } else {
        let ends: Vec<usize> = (n - 1..log.len()).collect();
        for chunk in ends.chunks(INFER_CHUNK) {
            let xs: Vec<Matrix> = chunk.iter().map(|&e| norm(&window_inputs(&rows, &[], e, n, opts))).collect();
            let refs: Vec<&Matrix> = xs.iter().collect();
            let y = model.network.predict(&refs)?;
            for (b, &end) in chunk.iter().enumerate() {
                let w = model.target_norm.denormalize(y.row(b));
                estimate[end] = [w[0], w[1]];
            }
        }
    }
    Ok(EstimateSeries {
        method: Method::Nn,
        t,
        truth,
        estimate,
        warmup: n - 1,
    })
}

/// Horizontal airspeed implied by a steady tilted hover.
///
/// The horizontal thrust `m g tan(tilt)` balances the drag
/// `C_d(V) V^2`; the magnitude is found by bisection and points along the
/// horizontal projection of the body z axis.
pub fn wt_airspeed(attitude: Vec3, params: &QuadParams) -> [f64; 2] {
    let axis = Rotation::from_euler(attitude).apply(Vec3::E3);
    let horiz = axis.norm_xy();
    if horiz == 0.0 || axis.z <= 0.0 {
        return [0.0, 0.0];
    }
    let force = params.weight() * horiz / axis.z;
    let drag = |v: f64| drag_coefficient(v) * v * v;
    let mut hi = 1.0;
    while drag(hi) < force {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if drag(mid) < force {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let speed = 0.5 * (lo + hi);
    [speed * axis.x / horiz, speed * axis.y / horiz]
}

/// Wind-triangle estimate: ground velocity from central differences of
/// position plus the tilt-implied airspeed.
pub fn wt_estimate(log: &TrajectoryLog, params: &QuadParams) -> Result<EstimateSeries> {
    if log.len() < 2 {
        return Err(Error::LogTooShort {
            len: log.len(),
            needed: 2,
        });
    }
    let s = &log.samples;
    let last = s.len() - 1;
    let (t, truth) = truth_of(log);
    let estimate = (0..s.len())
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(last));
            let v = (s[b].position - s[a].position) * (1.0 / (s[b].t - s[a].t));
            let air = wt_airspeed(s[k].attitude, params);
            [v.x + air[0], v.y + air[1]]
        })
        .collect();
    Ok(EstimateSeries {
        method: Method::Wt,
        t,
        truth,
        estimate,
        warmup: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlGains;
    use crate::estimate::{train, Dataset, TrainConfig};
    use crate::nn::ModelMetadata;
    use crate::quadsim::{simulate, LogSample, SimConfig};
    use crate::wind::{WindField, WindSpec};

    fn log_from(points: &[(Vec3, Vec3)]) -> TrajectoryLog {
        TrajectoryLog {
            samples: points
                .iter()
                .enumerate()
                .map(|(k, &(position, attitude))| LogSample {
                    t: 0.1 * k as f64,
                    position,
                    attitude,
                    wind: Vec3::ZERO,
                })
                .collect(),
            saturated_steps: 0,
        }
    }

    #[test]
    fn level_and_still_gives_zero_wind() {
        let log = log_from(&[(Vec3::ZERO, Vec3::ZERO); 5]);
        let est = wt_estimate(&log, &QuadParams::default()).unwrap();
        assert!(est.estimate.iter().all(|e| *e == [0.0, 0.0]));
    }

    #[test]
    fn level_and_moving_gives_ground_velocity() {
        let pts: Vec<_> = (0..6).map(|k| (Vec3::new(0.1 * k as f64, 0.0, 0.0), Vec3::ZERO)).collect();
        let est = wt_estimate(&log_from(&pts), &QuadParams::default()).unwrap();
        for e in &est.estimate {
            assert!((e[0] - 1.0).abs() < 1e-12 && e[1].abs() < 1e-12);
        }
    }

    #[test]
    fn airspeed_inverts_the_force_balance() {
        let p = QuadParams::default();
        for &(phi, theta) in &[(0.0, 0.05), (-0.08, 0.02), (0.2, -0.1)] {
            let att = Vec3::new(phi, theta, 0.0);
            let a = wt_airspeed(att, &p);
            let v = (a[0] * a[0] + a[1] * a[1]).sqrt();
            let axis = Rotation::from_euler(att).apply(Vec3::E3);
            let tan_tilt = axis.norm_xy() / axis.z;
            assert!((drag_coefficient(v) * v * v - p.weight() * tan_tilt).abs() < 1e-9);
            assert!((a[0] * axis.y - a[1] * axis.x).abs() < 1e-12);
            assert!(a[0] * axis.x + a[1] * axis.y > 0.0);
        }
    }

    #[test]
    fn wt_converges_in_steady_wind() {
        let p = QuadParams::default();
        let cfg = SimConfig {
            duration: 40.0,
            ..Default::default()
        };
        let mut wind = WindField::from_spec(&WindSpec::Constant { mean: Vec3::new(1.0, 2.0, 0.0) }, 0, 40.0, cfg.dt).unwrap();
        let log = simulate(&p, &ControlGains::default(), &mut wind, &cfg).unwrap();
        let est = wt_estimate(&log, &p).unwrap();
        for e in &est.estimate[est.len() - 50..] {
            assert!((e[0] - 1.0).abs() < 0.2 && (e[1] - 2.0).abs() < 0.3, "{e:?}");
        }
    }

    fn tiny_model(log: &TrajectoryLog, autoregressive: bool) -> Model {
        let cfg = TrainConfig {
            epochs: 2,
            hidden: vec![4],
            sequence_length: 5,
            autoregressive,
            ..Default::default()
        };
        let ds = Dataset::from_logs(&[log], &cfg).unwrap();
        let meta = ModelMetadata {
            trajectory: "hover".into(),
            ..Default::default()
        };
        train(&ds, &cfg, meta).unwrap().model
    }

    fn wiggle_log(len: usize) -> TrajectoryLog {
        let mut log = log_from(
            &(0..len)
                .map(|k| {
                    let x = k as f64 * 0.3;
                    (Vec3::new(x.sin(), x.cos(), -50.0), Vec3::new(0.01 * x.cos(), 0.02 * x.sin(), 0.0))
                })
                .collect::<Vec<_>>(),
        );
        for (k, s) in log.samples.iter_mut().enumerate() {
            s.wind = Vec3::new((k as f64 * 0.1).sin(), (k as f64 * 0.07).cos(), 0.0);
        }
        log
    }

    #[test]
    fn nn_estimate_marks_warmup_and_is_deterministic() {
        let log = wiggle_log(120);
        for ar in [false, true] {
            let model = tiny_model(&log, ar);
            let a = nn_estimate(&model, &log, Some("hover")).unwrap();
            let b = nn_estimate(&model, &log, None).unwrap();
            assert_eq!(a.warmup, 4);
            assert!(a.estimate[..4].iter().all(|e| e[0].is_nan()));
            assert!(a.estimate[4..].iter().all(|e| e[0].is_finite() && e[1].is_finite()));
            assert_eq!(format!("{:?}", a.estimate), format!("{:?}", b.estimate));
        }
    }

    #[test]
    fn batched_inference_matches_single_windows() {
        let log = wiggle_log(600);
        let model = tiny_model(&log, false);
        let est = nn_estimate(&model, &log, None).unwrap();
        let rows = feature_rows(&log);
        for end in [4, 300, 515, 599] {
            let raw = window_inputs(&rows, &[], end, 5, FeatureOptions::default());
            let x = normalize_window(&raw, &model.input_norm, &model.target_norm);
            let y = model.network.predict(&[&x]).unwrap();
            let w = model.target_norm.denormalize(y.row(0));
            assert_eq!([w[0], w[1]], est.estimate[end]);
        }
    }

    #[test]
    fn trajectory_mismatch_is_refused() {
        let log = wiggle_log(60);
        let model = tiny_model(&log, false);
        assert!(matches!(
            nn_estimate(&model, &log, Some("line")),
            Err(Error::TrajectoryMismatch { .. })
        ));
    }
}
