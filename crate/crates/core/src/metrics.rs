//! Error statistics comparing estimated and true horizontal wind.
//!
//! Errors are always `true - estimate`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimate::{EstimateSeries, Method};
use crate::io::{CsvOut, Provenance};

pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_left", "bin_right", "count"];

/// Symmetric 2x2 matrix `[[a, b], [b, c]]` stored as `[a, b, c]`.
pub type Cov2 = [f64; 3];

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population covariance of two equally long series.
pub fn covariance(a: &[f64], b: &[f64]) -> Cov2 {
    let (ma, mb) = (mean(a), mean(b));
    let n = a.len() as f64;
    let mut s = [0.0; 3];
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        s[0] += dx * dx;
        s[1] += dx * dy;
        s[2] += dy * dy;
    }
    s.map(|v| v / n)
}

/// Normalized error statistics of one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentErrors {
    /// Standard deviation of the true series.
    pub sigma: f64,
    /// `mean|e| / sigma`, or `mean|e|` when `sigma` is zero.
    pub mae: f64,
    /// `std(e) / sigma`, or `std(e)` when `sigma` is zero.
    pub error_std: f64,
    pub mean_error: f64,
    /// False when the true series is constant and the first two fields are
    /// left unnormalized.
    pub normalized: bool,
}

pub fn normalized_errors(truth: &[f64], est: &[f64]) -> Result<ComponentErrors> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: est.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::LogTooShort { len: 0, needed: 1 });
    }
    let e: Vec<f64> = truth.iter().zip(est).map(|(t, s)| t - s).collect();
    let sigma = variance(truth).sqrt();
    let mae = e.iter().map(|x| x.abs()).sum::<f64>() / e.len() as f64;
    let std = variance(&e).sqrt();
    let normalized = sigma > 0.0;
    let scale = if normalized { sigma } else { 1.0 };
    Ok(ComponentErrors {
        sigma,
        mae: mae / scale,
        error_std: std / scale,
        mean_error: mean(&e),
        normalized,
    })
}

fn check_pd(m: &Cov2, which: &str) -> Result<()> {
    let det = m[0] * m[2] - m[1] * m[1];
    if !(m[0] > 0.0 && det > 0.0 && m.iter().all(|v| v.is_finite())) {
        return Err(Error::NotPositiveDefinite(format!("{which} = [[{}, {}], [{}, {}]]", m[0], m[1], m[1], m[2])));
    }
    Ok(())
}

/// Generalized eigenvalues of `det(lambda A - B) = 0`, ascending.
pub fn generalized_eigenvalues(a: &Cov2, b: &Cov2) -> Result<[f64; 2]> {
    check_pd(a, "A")?;
    check_pd(b, "B")?;
    let det_a = a[0] * a[2] - a[1] * a[1];
    let det_b = b[0] * b[2] - b[1] * b[1];
    let tr = a[0] * b[2] + a[2] * b[0] - 2.0 * a[1] * b[1];
    // lambda^2 det A - lambda tr + det B = 0 with real positive roots.
    let disc = (tr * tr - 4.0 * det_a * det_b).max(0.0).sqrt();
    let hi = (tr + disc) / (2.0 * det_a);
    // Product of roots is det B / det A; avoids cancellation in the small root.
    let lo = det_b / (det_a * hi);
    Ok([lo, hi])
}

/// `sqrt(sum ln^2 lambda_i)` over the generalized eigenvalues of `(A, B)`.
pub fn covariance_distance(a: &Cov2, b: &Cov2) -> Result<f64> {
    let l = generalized_eigenvalues(a, b)?;
    Ok(l.iter().map(|x| x.ln().powi(2)).sum::<f64>().sqrt())
}

/// Angle between two horizontal wind vectors `[north, east]`, in `[0, pi]`.
/// `None` if either vector is zero.
pub fn direction_error(truth: [f64; 2], est: [f64; 2]) -> Option<f64> {
    if truth == [0.0, 0.0] || est == [0.0, 0.0] {
        return None;
    }
    let a = truth[0].atan2(truth[1]);
    let b = est[0].atan2(est[1]);
    Some((a - b).cos().clamp(-1.0, 1.0).acos())
}

/// `|true| - |est|` for a horizontal wind pair.
pub fn speed_error(truth: [f64; 2], est: [f64; 2]) -> f64 {
    truth[0].hypot(truth[1]) - est[0].hypot(est[1])
}

/// Componentwise `mean(true - est)`.
pub fn mean_error(truth: &[[f64; 2]], est: &[[f64; 2]]) -> [f64; 2] {
    let n = truth.len() as f64;
    let mut s = [0.0; 2];
    for (t, e) in truth.iter().zip(est) {
        s[0] += t[0] - e[0];
        s[1] += t[1] - e[1];
    }
    s.map(|v| v / n)
}

/// Off-diagonal north/east covariance term of a wind series.
pub fn off_diagonal_covariance(series: &[[f64; 2]]) -> f64 {
    let (n, e): (Vec<f64>, Vec<f64>) = series.iter().map(|w| (w[0], w[1])).unzip();
    covariance(&n, &e)[1]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Histogram of `errors / sigma` with bins of width `bin_width` centred on
/// multiples of the width, so zero sits in the middle of a bin.
pub fn error_histogram(errors: &[f64], sigma: f64, bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::invalid("bin_width", "must be positive"));
    }
    let scale = if sigma > 0.0 { sigma } else { 1.0 };
    let idx: Vec<i64> = errors
        .iter()
        .filter(|e| e.is_finite())
        .map(|e| (e / scale / bin_width).round() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Ok(Vec::new());
    };
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for i in idx {
        counts[(i - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| {
            let c = (lo + k as i64) as f64 * bin_width;
            HistogramBin {
                left: c - 0.5 * bin_width,
                right: c + 0.5 * bin_width,
                count,
            }
        })
        .collect())
}

pub fn write_histogram_csv(bins: &[HistogramBin], path: &Path, provenance: &Provenance) -> Result<()> {
    let mut out = CsvOut::create(path, provenance, &HISTOGRAM_HEADER)?;
    for b in bins {
        out.line(&format!("{},{},{}", b.left, b.right, b.count))?;
    }
    out.finish()
}

/// Full comparison of one estimate series against its truth.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub method: Method,
    pub north: ComponentErrors,
    pub east: ComponentErrors,
    /// `None` when either covariance is not positive definite.
    pub covariance_distance: Option<f64>,
    pub off_diagonal_true: f64,
    pub off_diagonal_est: f64,
    pub direction_mean: f64,
    pub direction_var: f64,
    /// Samples with a zero true or estimated vector, left out of the direction statistics.
    pub direction_excluded: usize,
    pub speed_mean: f64,
    pub speed_var: f64,
    pub samples: usize,
    /// Leading samples skipped.
    pub warmup_excluded: usize,
}

impl MetricsReport {
    /// Evaluates `series` from sample `skip` on. `skip` is raised to the
    /// series' own warm-up if that is longer.
    pub fn evaluate(series: &EstimateSeries, skip: usize) -> Result<Self> {
        let skip = skip.max(series.warmup);
        if series.len() <= skip {
            return Err(Error::LogTooShort {
                len: series.len(),
                needed: skip + 1,
            });
        }
        let truth = &series.truth[skip..];
        let est = &series.estimate[skip..];
        if est.iter().any(|e| !(e[0].is_finite() && e[1].is_finite())) {
            return Err(Error::invalid("estimate", "non-finite estimate after warm-up"));
        }
        let col = |s: &[[f64; 2]], j: usize| s.iter().map(|w| w[j]).collect::<Vec<f64>>();
        let (tn, te, en, ee) = (col(truth, 0), col(truth, 1), col(est, 0), col(est, 1));
        let cov_t = covariance(&tn, &te);
        let cov_e = covariance(&en, &ee);
        let dirs: Vec<f64> = truth.iter().zip(est).filter_map(|(t, e)| direction_error(*t, *e)).collect();
        let speeds: Vec<f64> = truth.iter().zip(est).map(|(t, e)| speed_error(*t, *e)).collect();
        let (direction_mean, direction_var) = if dirs.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (mean(&dirs), variance(&dirs))
        };
        Ok(Self {
            method: series.method,
            north: normalized_errors(&tn, &en)?,
            east: normalized_errors(&te, &ee)?,
            covariance_distance: covariance_distance(&cov_t, &cov_e).ok(),
            off_diagonal_true: cov_t[1],
            off_diagonal_est: cov_e[1],
            direction_mean,
            direction_var,
            direction_excluded: truth.len() - dirs.len(),
            speed_mean: mean(&speeds),
            speed_var: variance(&speeds),
            samples: truth.len(),
            warmup_excluded: skip,
        })
    }

    pub fn off_diagonal_sign_matches(&self) -> bool {
        self.off_diagonal_true.signum() == self.off_diagonal_est.signum()
    }

    /// Per-component errors `true - est` after the skipped samples.
    pub fn errors(series: &EstimateSeries, skip: usize) -> [Vec<f64>; 2] {
        let skip = skip.max(series.warmup).min(series.len());
        let e = series.truth[skip..].iter().zip(&series.estimate[skip..]);
        [e.clone().map(|(t, s)| t[0] - s[0]).collect(), e.map(|(t, s)| t[1] - s[1]).collect()]
    }

    fn rows(&self) -> Vec<(&'static str, &'static str, String)> {
        let f = |v: f64| format!("{v:.4}");
        let n = |c: &ComponentErrors| if c.normalized { "" } else { " (unnormalized)" };
        vec![
            ("north_mae_norm", "North MAE/sigma", format!("{}{}", f(self.north.mae), n(&self.north))),
            ("east_mae_norm", "East MAE/sigma", format!("{}{}", f(self.east.mae), n(&self.east))),
            ("north_err_std_norm", "North err std/sigma", format!("{}{}", f(self.north.error_std), n(&self.north))),
            ("east_err_std_norm", "East err std/sigma", format!("{}{}", f(self.east.error_std), n(&self.east))),
            ("north_mean_error", "North mean error (m/s)", f(self.north.mean_error)),
            ("east_mean_error", "East mean error (m/s)", f(self.east.mean_error)),
            (
                "covariance_distance",
                "Covariance distance",
                self.covariance_distance.map_or("n/a".into(), f),
            ),
            ("off_diagonal_true", "Off-diagonal (true)", f(self.off_diagonal_true)),
            ("off_diagonal_est", "Off-diagonal (est)", f(self.off_diagonal_est)),
            (
                "off_diagonal_sign_match",
                "Off-diagonal sign match",
                self.off_diagonal_sign_matches().to_string(),
            ),
            ("direction_var", "Direction err var (rad^2)", format!("{:.6}", self.direction_var)),
            ("direction_mean", "Direction mean err (rad)", format!("{:.5}", self.direction_mean)),
            ("speed_var", "Speed err var (m/s)^2", f(self.speed_var)),
            ("speed_mean", "Speed mean err (m/s)", f(self.speed_mean)),
            ("north_sigma", "True sigma north (m/s)", f(self.north.sigma)),
            ("east_sigma", "True sigma east (m/s)", f(self.east.sigma)),
            ("samples", "Samples", self.samples.to_string()),
            ("warmup_excluded", "Warm-up excluded", self.warmup_excluded.to_string()),
            ("direction_excluded", "Direction excluded", self.direction_excluded.to_string()),
        ]
    }
}

/// Aligned table with one column per report, rows as in the usual
/// NN-versus-WT comparison tables.
pub fn format_reports(reports: &[MetricsReport]) -> String {
    let mut out = String::from("# errors are true - estimate\n");
    if reports.is_empty() {
        return out;
    }
    let rows: Vec<_> = reports.iter().map(MetricsReport::rows).collect();
    let label_w = rows[0].iter().map(|r| r.1.len()).max().unwrap_or(0);
    let col_w = rows.iter().flatten().map(|r| r.2.len()).max().unwrap_or(0).max(6);
    let _ = write!(out, "{:label_w$}", "");
    for r in reports {
        let _ = write!(out, "  {:>col_w$}", r.method.to_string().to_uppercase());
    }
    out.push('\n');
    for i in 0..rows[0].len() {
        let _ = write!(out, "{:label_w$}", rows[0][i].1);
        for r in &rows {
            let _ = write!(out, "  {:>col_w$}", r[i].2);
        }
        out.push('\n');
    }
    out
}

/// `key = value` lines, one `[method]` section per report.
pub fn format_key_values(reports: &[MetricsReport], provenance: &Provenance) -> String {
    let mut out = format!("{}\n# errors are true - estimate\n", provenance.line());
    for r in reports {
        let _ = writeln!(out, "\n[{}]", r.method);
        for (key, _, value) in r.rows() {
            let value = value.trim_end_matches(" (unnormalized)");
            let value = if value == "n/a" { "nan" } else { value };
            let _ = writeln!(out, "{key} = {value}");
        }
        let _ = writeln!(out, "north_normalized = {}", r.north.normalized);
        let _ = writeln!(out, "east_normalized = {}", r.east.normalized);
    }
    out
}
