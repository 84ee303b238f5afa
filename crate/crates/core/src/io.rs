//! CSV files exchanged between pipeline stages.
//!
//! Every file written here starts with a provenance comment,
//! `# quadwind <version> config=<sha256> seed=<n>`, followed by a header row.
//! Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::quadsim::{LogSample, TrajectoryLog};

pub const TRAJECTORY_HEADER: [&str; 10] = ["t", "pn", "pe", "pd", "phi", "theta", "psi", "wn", "we", "wd"];
pub const WIND_SIGNAL_HEADER: [&str; 4] = ["t", "wn", "we", "wd"];

/// Identifies the configuration and seed that produced a file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "# quadwind {} config={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )
    }
}

/// Buffered writer for a provenance-stamped CSV.
pub struct CsvOut {
    path: std::path::PathBuf,
    inner: BufWriter<File>,
}

impl CsvOut {
    pub fn create(path: &Path, provenance: &Provenance, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = Self {
            path: path.to_path_buf(),
            inner: BufWriter::new(file),
        };
        out.line(&provenance.line())?;
        out.line(&header.join(","))?;
        Ok(out)
    }

    pub fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.inner, "{text}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let text = values.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        self.line(&text)
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Reads a numeric CSV with the given header; `#` lines are skipped.
pub fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let found: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Format {
            what: "csv header",
            offset: 0,
            reason: format!("expected `{}`, found `{}` in {}", header.join(","), found.join(","), path.display()),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let offset = record.position().map_or(0, |p| p.byte());
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format {
                what: "csv row",
                offset,
                reason: format!("{e} in {}", path.display()),
            })?;
        if row.len() != header.len() {
            return Err(Error::Format {
                what: "csv row",
                offset,
                reason: format!("expected {} fields, found {}", header.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads the `config=` and `seed=` fields of a provenance line, if present.
pub fn read_provenance(path: &Path) -> Result<Option<Provenance>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let Some(first) = text.lines().next() else {
        return Ok(None);
    };
    if !first.starts_with("# quadwind ") {
        return Ok(None);
    }
    let mut p = Provenance::default();
    for field in first.split_whitespace() {
        if let Some(h) = field.strip_prefix("config=") {
            p.config_hash = h.to_string();
        } else if let Some(s) = field.strip_prefix("seed=") {
            p.seed = s.parse().unwrap_or(0);
        }
    }
    Ok(Some(p))
}

pub fn write_trajectory_csv(log: &TrajectoryLog, path: &Path, provenance: &Provenance) -> Result<()> {
    let mut out = CsvOut::create(path, provenance, &TRAJECTORY_HEADER)?;
    for s in &log.samples {
        let (p, a, w) = (s.position, s.attitude, s.wind);
        out.row(&[s.t, p.x, p.y, p.z, a.x, a.y, a.z, w.x, w.y, w.z])?;
    }
    out.finish()
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryLog> {
    let rows = read_numeric_csv(path, &TRAJECTORY_HEADER)?;
    let samples = rows
        .iter()
        .map(|r| LogSample {
            t: r[0],
            position: Vec3::new(r[1], r[2], r[3]),
            attitude: Vec3::new(r[4], r[5], r[6]),
            wind: Vec3::new(r[7], r[8], r[9]),
        })
        .collect();
    Ok(TrajectoryLog {
        samples,
        saturated_steps: 0,
    })
}

pub fn write_wind_signal_csv(times: &[f64], winds: &[Vec3], path: &Path, provenance: &Provenance) -> Result<()> {
    let mut out = CsvOut::create(path, provenance, &WIND_SIGNAL_HEADER)?;
    for (t, w) in times.iter().zip(winds) {
        out.row(&[*t, w.x, w.y, w.z])?;
    }
    out.finish()
}
