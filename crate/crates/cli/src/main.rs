use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quadwind_core::config::{LoadedConfig, RunConfig};
use quadwind_core::estimate::{
    nn_estimate, read_dataset_csv, read_estimate_csv, train_with_progress, wt_estimate, write_dataset_csv,
    write_estimate_csv, Dataset, Method,
};
use quadwind_core::io::{read_provenance, read_trajectory_csv, write_trajectory_csv, write_wind_signal_csv, Provenance};
use quadwind_core::nn::Model;
use quadwind_core::pipeline::{self, ReproCase};
use quadwind_core::wind::{grid_from_csv, save_grid_wind, WindField, WindSpec, GRID_MAGIC};
use quadwind_core::Error;

/// Quadcopter wind estimation: simulation, LSTM training and evaluation.
#[derive(Parser)]
#[command(name = "quadwind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured wind into a signal CSV, or convert a grid CSV
    /// into a binary grid file.
    GenWind {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Sampling rate, Hz. Defaults to the simulation rate.
        #[arg(long)]
        rate: Option<f64>,
        /// Grid CSV (`t,x,y,z,wn,we,wd`) to convert instead.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
    },
    /// Fly the configured trajectory and write the trajectory log.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Wind signal CSV or binary grid file replacing the configured wind.
        #[arg(long)]
        wind: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut logs into training windows with a train/validation split.
    BuildDataset {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "log", required = true, num_args = 1..)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an LSTM on a dataset.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Loss history CSV.
        #[arg(long)]
        loss: PathBuf,
    },
    /// Estimate the wind along a log with a trained model or the wind triangle.
    Estimate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Method,
        /// Required for `nn`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trajectory kind of the log; defaults to the configured trajectory.
        #[arg(long)]
        trajectory: Option<String>,
        /// Apply the model even if it was trained on another trajectory kind.
        #[arg(long)]
        allow_mismatch: bool,
    },
    /// Compare estimates with the true wind; writes report and histograms.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "estimates", required = true, num_args = 1..)]
        estimates: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named case end to end.
    Repro {
        /// hover-dryden-1.06, line-dryden-1.06 or hover-piecewise
        case: ReproCase,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Short flights and a small network, for smoke testing.
        #[arg(long)]
        quick: bool,
    },
}

enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                Failure::Usage(format!("file not found: {}", path.display()))
            }
            Error::Csv { path, source } if matches!(source.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound) => {
                Failure::Usage(format!("file not found: {}", path.display()))
            }
            Error::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load_config(path: Option<&Path>) -> std::result::Result<LoadedConfig, Failure> {
    match path {
        None => Ok(RunConfig::default().loaded()),
        Some(p) => RunConfig::load(p).map_err(|e| match Failure::from(e) {
            Failure::Runtime(m) => Failure::Config(format!("{}: {m}", p.display())),
            Failure::Config(m) => Failure::Config(format!("{}: {m}", p.display())),
            other => other,
        }),
    }
}

fn require_file(path: &Path) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("file not found: {}", path.display())))
    }
}

fn note(msg: &str) {
    eprintln!("quadwind: {msg}");
}

fn gen_wind(cfg: &LoadedConfig, out: &Path, rate: Option<f64>, grid_csv: Option<&Path>) -> Outcome {
    if let Some(src) = grid_csv {
        require_file(src)?;
        let field = grid_from_csv(src)?;
        save_grid_wind(&field, out)?;
        return Ok(());
    }
    let c = &cfg.config;
    if matches!(c.wind, WindSpec::Grid { .. }) {
        return Err(Failure::Usage("gridded winds vary in space; pass --grid-csv to build a grid file".into()));
    }
    let sim = c.sim_config();
    let rate = rate.unwrap_or(1.0 / sim.dt);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Failure::Usage(format!("--rate must be positive, got {rate}")));
    }
    let mut field = WindField::from_spec(&c.wind, c.seed, sim.duration, sim.dt)?;
    let n = (sim.duration * rate).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 / rate).collect();
    let at = match &c.trajectory {
        quadwind_core::TrajectorySpec::Hover { waypoint } => *waypoint,
        quadwind_core::TrajectorySpec::Line { start, .. } => *start,
    };
    let winds: Vec<_> = times.iter().map(|&t| field.sample(at, t)).collect();
    write_wind_signal_csv(&times, &winds, out, &pipeline::provenance(cfg))?;
    Ok(())
}

fn simulate(cfg: &LoadedConfig, wind: Option<&Path>, out: &Path) -> Outcome {
    let mut c = cfg.config.clone();
    if let Some(path) = wind {
        require_file(path)?;
        let bytes = std::fs::read(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        let path = path.to_path_buf();
        c.wind = if bytes.starts_with(GRID_MAGIC) {
            WindSpec::Grid { path }
        } else {
            WindSpec::File { path }
        };
    }
    let log = pipeline::simulate_run(&c, c.seed)?;
    if log.saturated_steps > 0 {
        note(&format!("rotor allocation saturated on {} steps", log.saturated_steps));
    }
    write_trajectory_csv(&log, out, &pipeline::provenance(cfg))?;
    Ok(())
}

fn build_dataset(cfg: &LoadedConfig, logs: &[PathBuf], out: &Path) -> Outcome {
    let mut loaded = Vec::with_capacity(logs.len());
    for p in logs {
        require_file(p)?;
        loaded.push(read_trajectory_csv(p)?);
    }
    let refs: Vec<_> = loaded.iter().collect();
    let ds = Dataset::from_logs(&refs, &cfg.config.train)?;
    note(&format!(
        "{} windows: {} training, {} validation",
        ds.windows.len(),
        ds.train.len(),
        ds.validation.len()
    ));
    write_dataset_csv(&ds, out, &pipeline::provenance(cfg))?;
    Ok(())
}

fn train(cfg: &LoadedConfig, dataset: &Path, model: &Path, loss: &Path) -> Outcome {
    require_file(dataset)?;
    let ds = read_dataset_csv(dataset, &cfg.config.train)?;
    let outcome = train_with_progress(&ds, &cfg.config.train, pipeline::model_metadata(cfg), |e| {
        note(&format!("epoch {} train {:.6} validation {:.6}", e.epoch, e.train, e.validation));
    })?;
    note(&format!("best epoch {}", outcome.best_epoch));
    outcome.model.save(model)?;
    pipeline::write_loss_csv(&outcome.history, loss, &pipeline::provenance(cfg))?;
    Ok(())
}

struct EstimateArgs<'a> {
    method: Method,
    model: Option<&'a Path>,
    log: &'a Path,
    out: &'a Path,
    trajectory: Option<&'a str>,
    allow_mismatch: bool,
}

fn estimate(cfg: &LoadedConfig, a: EstimateArgs<'_>) -> Outcome {
    require_file(a.log)?;
    let log = read_trajectory_csv(a.log)?;
    let series = match a.method {
        Method::Wt => wt_estimate(&log, &cfg.config.quad)?,
        Method::Nn => {
            let path = a.model.ok_or_else(|| Failure::Usage("--model is required for --method nn".into()))?;
            require_file(path)?;
            let model = Model::load(path)?;
            let kind = a.trajectory.unwrap_or(cfg.config.trajectory.name());
            nn_estimate(&model, &log, (!a.allow_mismatch).then_some(kind))?
        }
    };
    // The estimate inherits the provenance of the log it was computed from.
    let prov = read_provenance(a.log)?.unwrap_or_else(|| pipeline::provenance(cfg));
    write_estimate_csv(&series, a.out, &prov)?;
    Ok(())
}

fn evaluate(cfg: &LoadedConfig, estimates: &[PathBuf], out: &Path) -> Outcome {
    let mut series = Vec::with_capacity(estimates.len());
    for p in estimates {
        require_file(p)?;
        series.push(read_estimate_csv(p)?);
    }
    std::fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    let prov: Provenance = read_provenance(&estimates[0])?.unwrap_or_else(|| pipeline::provenance(cfg));
    let reports = pipeline::write_evaluation(&series, cfg.config.evaluate.histogram_bin_width, out, &prov)?;
    print!("{}", quadwind_core::metrics::format_reports(&reports));
    Ok(())
}

fn repro(cfg: &LoadedConfig, case: ReproCase, out: &Path, quick: bool) -> Outcome {
    let outcome = pipeline::run_repro(case, &cfg.config, out, quick, note)?;
    print!("{}", quadwind_core::metrics::format_reports(&outcome.reports));
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::GenWind { config, out, rate, grid_csv } => {
            gen_wind(&load_config(config.as_deref())?, &out, rate, grid_csv.as_deref())
        }
        Command::Simulate { config, wind, out } => simulate(&load_config(config.as_deref())?, wind.as_deref(), &out),
        Command::BuildDataset { config, logs, out } => build_dataset(&load_config(config.as_deref())?, &logs, &out),
        Command::Train { config, dataset, model, loss } => train(&load_config(config.as_deref())?, &dataset, &model, &loss),
        Command::Estimate { config, method, model, log, out, trajectory, allow_mismatch } => estimate(
            &load_config(config.as_deref())?,
            EstimateArgs {
                method,
                model: model.as_deref(),
                log: &log,
                out: &out,
                trajectory: trajectory.as_deref(),
                allow_mismatch,
            },
        ),
        Command::Evaluate { config, estimates, out } => evaluate(&load_config(config.as_deref())?, &estimates, &out),
        Command::Repro { case, config, out, quick } => repro(&load_config(config.as_deref())?, case, &out, quick),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("quadwind: error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
