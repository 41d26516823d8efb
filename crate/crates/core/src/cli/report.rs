//! Report rows and their CSV / JSON serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;

/// One self-describing output row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub suite: String,
    pub observable: String,
    /// `key=value` pairs separated by `;`.
    pub parameters: String,
    pub estimate: f64,
    pub error: f64,
    /// Right-hand side of an identity.
    pub reference: Option<f64>,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub sigmas: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub passed: bool,
    /// Control rows are reported but never fail a run.
    pub control: bool,
    pub wall_time: f64,
}

impl ReportRow {
    pub fn new(suite: &str, observable: impl Into<String>, parameters: impl Into<String>, estimate: f64) -> Self {
        Self {
            suite: suite.to_string(),
            observable: observable.into(),
            parameters: parameters.into(),
            estimate,
            error: 0.0,
            reference: None,
            bound: None,
            margin: None,
            sigmas: None,
            method: String::new(),
            seed: 0,
            passed: true,
            control: false,
            wall_time: 0.0,
        }
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "suite",
    "observable",
    "parameters",
    "estimate",
    "error",
    "reference",
    "bound",
    "margin",
    "sigmas",
    "method",
    "seed",
    "passed",
    "control",
    "wall_time",
];

/// 17 significant digits, enough to round-trip every `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn record(r: &ReportRow) -> [String; 14] {
    [
        r.suite.clone(),
        r.observable.clone(),
        r.parameters.clone(),
        format_f64(r.estimate),
        format_f64(r.error),
        opt(r.reference),
        opt(r.bound),
        opt(r.margin),
        opt(r.sigmas),
        r.method.clone(),
        r.seed.to_string(),
        r.passed.to_string(),
        r.control.to_string(),
        format_f64(r.wall_time),
    ]
}

pub fn write_csv<W: std::io::Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ReportRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub failures: usize,
    pub controls: usize,
}

impl Summary {
    pub fn of(rows: &[ReportRow]) -> Self {
        Self {
            rows: rows.len(),
            failures: rows.iter().filter(|r| !r.passed && !r.control).count(),
            controls: rows.iter().filter(|r| r.control).count(),
        }
    }
}

/// The JSON document: resolved config, rows and summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subcommand: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(subcommand: &str, config: ExperimentConfig, rows: Vec<ReportRow>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config,
            summary: Summary::of(&rows),
            rows,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<dir>/<subcommand>.csv` and `<dir>/<subcommand>.json`.
    pub fn emit(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.subcommand));
        let json_path = dir.join(format!("{}.json", self.subcommand));
        write_csv(&self.rows, fs::File::create(&csv_path)?)?;
        fs::write(&json_path, self.to_json()?)?;
        Ok((csv_path, json_path))
    }
}
