use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.csv";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Volumes {
    pub base: f64,
    pub perturbed: Vec<f64>,
}

/// Scalars that an experiment does not produce are serialized as null.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub seed: u64,
    pub version: String,
    pub max_defect: Option<f64>,
    pub beta_mean: Option<f64>,
    pub beta_spread: Option<f64>,
    pub residual: Option<f64>,
    pub volumes: Option<Volumes>,
    pub slack_min: Option<f64>,
    pub identity_max_residual: Option<f64>,
    pub degenerate_count: Option<usize>,
    pub table: String,
}

impl ExperimentReport {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            max_defect: None,
            beta_mean: None,
            beta_spread: None,
            residual: None,
            volumes: None,
            slack_min: None,
            identity_max_residual: None,
            degenerate_count: None,
            table: TABLE_FILE.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Float(x) => f.write_str(&format_float(*x)),
            Cell::Int(x) => write!(f, "{x}"),
            Cell::Bool(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// Shortest string that parses back to the same double. Positional
/// notation in the usual range, exponent notation outside it.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{cell}");
            }
            out.push('\n');
        }
        out
    }
}

/// Writes `report.json` and `table.csv` under `out`; returns both paths.
pub fn emit_report(report: &ExperimentReport, table: &Table, out: &Path) -> io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out)?;
    let table_path = out.join(&report.table);
    std::fs::write(&table_path, table.to_csv())?;
    let mut json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    json.push('\n');
    let report_path = out.join(REPORT_FILE);
    std::fs::write(&report_path, json)?;
    Ok((report_path, table_path))
}
