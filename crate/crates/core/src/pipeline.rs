//! End-to-end stages shared by the command-line tool: simulation from a run
//! config, training with a loss history, evaluation artifacts, and the named
//! reproduction cases.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{LoadedConfig, RunConfig, TrajectorySpec};
use crate::error::{Error, Result};
use crate::estimate::{nn_estimate, train, wt_estimate, write_estimate_csv, Dataset, EpochLoss, EstimateSeries};
use crate::io::{write_trajectory_csv, CsvOut, Provenance};
use crate::math::Vec3;
use crate::metrics::{error_histogram, format_key_values, format_reports, write_histogram_csv, MetricsReport};
use crate::nn::{Model, ModelMetadata};
use crate::quadsim::{simulate, TrajectoryLog};
use crate::wind::{WindField, WindSpec};

pub const LOSS_HEADER: [&str; 3] = ["epoch", "train_loss", "val_loss"];

/// Position bound used for long straight-line flights.
pub const LINE_DIVERGENCE_BOUND: f64 = 1e6;

pub fn provenance(cfg: &LoadedConfig) -> Provenance {
    Provenance::new(cfg.hash.clone(), cfg.config.seed)
}

/// Flies the configured trajectory through the configured wind, seeded by
/// `wind_seed`.
pub fn simulate_run(cfg: &RunConfig, wind_seed: u64) -> Result<TrajectoryLog> {
    let sim = cfg.sim_config();
    let mut wind = WindField::from_spec(&cfg.wind, wind_seed, sim.duration, sim.dt)?;
    simulate(&cfg.quad, &cfg.control, &mut wind, &sim)
}

/// Metadata stamped into a model trained under `cfg`.
pub fn model_metadata(cfg: &LoadedConfig) -> ModelMetadata {
    ModelMetadata {
        trajectory: cfg.config.trajectory.name().to_string(),
        config_hash: cfg.hash.clone(),
        training_wind: cfg.config.wind.describe(),
        ..Default::default()
    }
}

pub fn write_loss_csv(history: &[EpochLoss], path: &Path, provenance: &Provenance) -> Result<()> {
    let mut out = CsvOut::create(path, provenance, &LOSS_HEADER)?;
    for e in history {
        out.line(&format!("{},{},{}", e.epoch, e.train, e.validation))?;
    }
    out.finish()
}

/// Writes `text` behind a provenance comment.
pub fn write_text(path: &Path, provenance: &Provenance, text: &str) -> Result<()> {
    let body = format!("{}\n{}", provenance.line(), text);
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes a config preceded by a provenance comment.
pub fn write_config(path: &Path, cfg: &LoadedConfig) -> Result<()> {
    write_text(path, &provenance(cfg), &cfg.config.to_toml())
}

/// Evaluates each series from a common start, the longest warm-up among
/// them, and writes `report.txt`, `report.toml` and one histogram CSV per
/// method and component into `dir`.
pub fn write_evaluation(
    series: &[EstimateSeries],
    bin_width: f64,
    dir: &Path,
    provenance: &Provenance,
) -> Result<Vec<MetricsReport>> {
    let skip = series.iter().map(|s| s.warmup).max().unwrap_or(0);
    let mut reports = Vec::with_capacity(series.len());
    for s in series {
        let report = MetricsReport::evaluate(s, skip)?;
        let errors = MetricsReport::errors(s, skip);
        for (name, errs, c) in [("north", &errors[0], &report.north), ("east", &errors[1], &report.east)] {
            let bins = error_histogram(errs, c.sigma, bin_width)?;
            write_histogram_csv(&bins, &dir.join(format!("hist_{}_{name}.csv", s.method)), provenance)?;
        }
        reports.push(report);
    }
    write_text(&dir.join("report.txt"), provenance, &format_reports(&reports))?;
    let kv = format_key_values(&reports, provenance);
    std::fs::write(dir.join("report.toml"), &kv).map_err(|e| Error::io(dir.join("report.toml"), e))?;
    Ok(reports)
}

/// Named end-to-end reproduction cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReproCase {
    HoverDryden106,
    LineDryden106,
    HoverPiecewise,
}

impl ReproCase {
    pub const ALL: [ReproCase; 3] = [ReproCase::HoverDryden106, ReproCase::LineDryden106, ReproCase::HoverPiecewise];

    pub fn name(&self) -> &'static str {
        match self {
            ReproCase::HoverDryden106 => "hover-dryden-1.06",
            ReproCase::LineDryden106 => "line-dryden-1.06",
            ReproCase::HoverPiecewise => "hover-piecewise",
        }
    }

    /// Training and test configurations derived from `base`.
    pub fn configs(&self, base: &RunConfig, quick: bool) -> (RunConfig, RunConfig) {
        let mut train = base.clone();
        train.wind = WindSpec::piecewise_default();
        let (train_secs, test_secs) = match self {
            ReproCase::HoverPiecewise => (1800.0, 600.0),
            _ => (4800.0, 5000.0),
        };
        train.sim.duration = train_secs;
        match self {
            ReproCase::LineDryden106 => {
                train.trajectory = TrajectorySpec::line();
                train.train.relative_positions = true;
                train.sim.divergence_bound = train.sim.divergence_bound.max(LINE_DIVERGENCE_BOUND);
            }
            _ => {
                train.trajectory = TrajectorySpec::default();
                train.train.relative_positions = false;
            }
        }
        if quick {
            train.sim.duration = 240.0;
            train.train.epochs = 2;
            train.train.hidden = vec![8, 8];
        }
        let mut test = train.clone();
        test.seed = base.seed.wrapping_add(1);
        test.sim.duration = if quick { 120.0 } else { test_secs };
        if *self != ReproCase::HoverPiecewise {
            test.wind = WindSpec::dryden(Vec3::new(1.0, 2.0, 0.0), Vec3::new(1.06, 1.06, 0.7));
        }
        (train, test)
    }
}

impl fmt::Display for ReproCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReproCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ReproCase::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = ReproCase::ALL.iter().map(|c| c.name()).collect();
            format!("unknown case `{s}`; expected one of {}", names.join(", "))
        })
    }
}

/// Outputs of a reproduction run.
#[derive(Debug)]
pub struct ReproOutcome {
    pub model: Model,
    pub reports: Vec<MetricsReport>,
    pub files: Vec<PathBuf>,
}

/// Runs a case end to end into `out`: configs, logs, loss history, model,
/// NN and WT estimates, report and histograms.
pub fn run_repro(
    case: ReproCase,
    base: &RunConfig,
    out: &Path,
    quick: bool,
    mut progress: impl FnMut(&str),
) -> Result<ReproOutcome> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (train_cfg, test_cfg) = case.configs(base, quick);
    train_cfg.validate()?;
    test_cfg.validate()?;
    let (train_cfg, test_cfg) = (train_cfg.loaded(), test_cfg.loaded());
    let (train_prov, test_prov) = (provenance(&train_cfg), provenance(&test_cfg));
    let mut files = Vec::new();
    let mut path = |name: &str| {
        let p = out.join(name);
        files.push(p.clone());
        p
    };

    write_config(&path("train_config.toml"), &train_cfg)?;
    write_config(&path("test_config.toml"), &test_cfg)?;

    progress("simulating training flight");
    let train_log = simulate_run(&train_cfg.config, train_cfg.config.seed)?;
    write_trajectory_csv(&train_log, &path("train_log.csv"), &train_prov)?;

    progress("training");
    let ds = Dataset::from_logs(&[&train_log], &train_cfg.config.train)?;
    let outcome = train(&ds, &train_cfg.config.train, model_metadata(&train_cfg))?;
    write_loss_csv(&outcome.history, &path("loss.csv"), &train_prov)?;
    outcome.model.save(&path("model.qwm"))?;

    progress("simulating test flight");
    let test_log = simulate_run(&test_cfg.config, test_cfg.config.seed)?;
    write_trajectory_csv(&test_log, &path("test_log.csv"), &test_prov)?;

    progress("estimating");
    let trajectory = test_cfg.config.trajectory.name();
    let nn = nn_estimate(&outcome.model, &test_log, Some(trajectory))?;
    let wt = wt_estimate(&test_log, &test_cfg.config.quad)?;
    write_estimate_csv(&nn, &path("estimate_nn.csv"), &test_prov)?;
    write_estimate_csv(&wt, &path("estimate_wt.csv"), &test_prov)?;

    progress("evaluating");
    let reports = write_evaluation(&[nn, wt], test_cfg.config.evaluate.histogram_bin_width, out, &test_prov)?;
    for name in ["report.txt", "report.toml"] {
        path(name);
    }
    for m in ["nn", "wt"] {
        for c in ["north", "east"] {
            path(&format!("hist_{m}_{c}.csv"));
        }
    }
    Ok(ReproOutcome {
        model: outcome.model,
        reports,
        files,
    })
}
