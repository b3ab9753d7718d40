//! Config-driven experiment runner: JSON config in, JSON report (and an
//! optional CSV series) out.
//!
//! Reports are deterministic given the config and seed. The only field that
//! changes between identical runs is `run_info`.

mod config;
mod format;
mod run;
mod verify;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use config::{
    AuditConfig, AuditKind, BarycenterConfig, CondexpConfig, ErgodicConfig, ExperimentConfig, ExperimentKind,
    LdpConfig, MapdistConfig, MartingaleConfig, MonteCarloConfig, SemiflowConfig, SllnConfig, WassersteinConfig,
};
pub use format::to_exact_json;
pub use verify::{verify_report, Verification};

use crate::error::{Error, Result};

pub const LIBRARY: &str = "barylab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// The run completed but a report check failed, or verification failed.
    pub const CHECK_FAILED: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const CONVERGENCE: i32 = 3;
    pub const CAPACITY: i32 = 4;
    pub const IO: i32 = 5;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Domain(_) | Error::Unsupported(_) => exit::INVALID,
        Error::Convergence { .. } => exit::CONVERGENCE,
        Error::Capacity(_) => exit::CAPACITY,
    }
}

/// A named inequality `value ≤ bound` recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// A boolean property encoded as `0 ≤ 0` (holds) or `1 ≤ 0` (fails).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub timestamp_unix: u64,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub library: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub result: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub run_info: RunInfo,
}

/// A plot-ready table.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::input(format!("csv: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::input(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv of ASCII numbers"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub series: Option<Series>,
}

impl Outcome {
    pub fn json(&self) -> String {
        to_exact_json(&self.report).expect("reports serialize")
    }
}

/// Runs one experiment. The config must already carry its seed if the
/// experiment is randomized.
pub fn run_config(config: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let (result, checks, series) = run::execute(config)?;
    let pass = checks.iter().all(|c| c.pass);
    let report = Report {
        library: LIBRARY.into(),
        version: VERSION.into(),
        kind: config.kind(),
        config: config.clone(),
        result,
        checks,
        pass,
        run_info: RunInfo {
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
    };
    Ok(Outcome { report, series })
}

fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Writes `<kind>_report.json` and, if present, `<kind>_series.csv` into
/// `dir`. Returns the written paths.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let kind = outcome.report.kind.as_str();
    let mut written = Vec::new();
    let csv = match &outcome.series {
        Some(s) => Some(s.to_csv().map_err(|e| io::Error::other(e.to_string()))?),
        None => None,
    };
    let json_path = dir.join(format!("{kind}_report.json"));
    write_atomic(&json_path, &outcome.json())?;
    written.push(json_path);
    if let Some(csv) = csv {
        let csv_path = dir.join(format!("{kind}_series.csv"));
        write_atomic(&csv_path, &csv)?;
        written.push(csv_path);
    }
    Ok(written)
}

/// Removes the `run_info` field so that reports of identical runs compare
/// byte for byte.
pub fn strip_run_info(report_json: &str) -> Result<String> {
    let mut v: serde_json::Value =
        serde_json::from_str(report_json).map_err(|e| Error::input(format!("report is not JSON: {e}")))?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("run_info");
    }
    to_exact_json(&v).map_err(|e| Error::input(e.to_string()))
}
