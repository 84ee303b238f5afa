use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::{CsvOut, Provenance};

pub const ESTIMATE_HEADER: [&str; 6] = ["t", "wn_true", "we_true", "wn_est", "we_est", "method"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Nn,
    Wt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Nn => "nn",
            Method::Wt => "wt",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nn" => Ok(Method::Nn),
            "wt" => Ok(Method::Wt),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Horizontal wind estimates aligned with the true wind of a log.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSeries {
    pub method: Method,
    pub t: Vec<f64>,
    pub truth: Vec<[f64; 2]>,
    /// NaN during warm-up.
    pub estimate: Vec<[f64; 2]>,
    /// Leading samples without an estimate.
    pub warmup: usize,
}

impl EstimateSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub fn write_estimate_csv(series: &EstimateSeries, path: &Path, provenance: &Provenance) -> Result<()> {
    let mut out = CsvOut::create(path, provenance, &ESTIMATE_HEADER)?;
    for k in 0..series.len() {
        let (tr, es) = (series.truth[k], series.estimate[k]);
        out.line(&format!("{},{},{},{},{},{}", series.t[k], tr[0], tr[1], es[0], es[1], series.method))?;
    }
    out.finish()
}

/// Reads an estimate CSV. All rows must share one method.
pub fn read_estimate_csv(path: &Path) -> Result<EstimateSeries> {
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
    if found != ESTIMATE_HEADER {
        return Err(Error::Format {
            what: "estimate csv header",
            offset: 0,
            reason: format!("expected `{}` in {}", ESTIMATE_HEADER.join(","), path.display()),
        });
    }
    let mut method = None;
    let mut s = EstimateSeries {
        method: Method::Nn,
        t: Vec::new(),
        truth: Vec::new(),
        estimate: Vec::new(),
        warmup: 0,
    };
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let offset = record.position().map_or(0, |p| p.byte());
        let bad = |reason: String| Error::Format {
            what: "estimate csv row",
            offset,
            reason,
        };
        if record.len() != ESTIMATE_HEADER.len() {
            return Err(bad(format!("expected 6 fields, found {}", record.len())));
        }
        let v: Vec<f64> = (0..5)
            .map(|i| record[i].parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let m: Method = record[5].parse().map_err(bad)?;
        if *method.get_or_insert(m) != m {
            return Err(bad("mixed methods in one file".into()));
        }
        s.t.push(v[0]);
        s.truth.push([v[1], v[2]]);
        s.estimate.push([v[3], v[4]]);
    }
    s.method = method.unwrap_or(Method::Nn);
    s.warmup = s.estimate.iter().take_while(|e| e[0].is_nan() || e[1].is_nan()).count();
    Ok(s)
}
