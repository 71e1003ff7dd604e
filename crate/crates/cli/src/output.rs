//! Result documents: JSON with a meta block, or CSV with `#` meta lines.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig, Task};
use crate::error::CliError;

pub const TOOL: &str = "thermoform";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub task: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl Meta {
    pub fn new(task: Task, config: &RunConfig) -> Self {
        Meta {
            tool: TOOL,
            version: VERSION,
            task: task.name(),
            seed: config.numeric.seed,
            config_sha256: hex::encode(Sha256::digest(config.canonical_json().as_bytes())),
        }
    }
}

/// A rectangular table for CSV output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a task produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub result: Value,
    pub table: Option<Table>,
    /// Tags whose checks failed; a non-empty list makes the run exit with code 1.
    pub failed: Vec<String>,
}

impl Report {
    pub fn new(result: impl Serialize, table: Option<Table>) -> Self {
        Report {
            result: serde_json::to_value(result).expect("report serializes"),
            table,
            failed: Vec::new(),
        }
    }
}

/// Decimal form with `.` separator, switching to exponent notation for very
/// large or small magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn render(meta: &Meta, report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Document<'a> {
                meta: &'a Meta,
                result: &'a Value,
            }
            let mut s = serde_json::to_string_pretty(&Document {
                meta,
                result: &report.result,
            })
            .expect("document serializes");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let table = report.table.as_ref().ok_or_else(|| {
                CliError::validation("output.format", format!("task {} has no CSV form", meta.task))
            })?;
            let mut out = format!(
                "# tool: {}\n# version: {}\n# task: {}\n# seed: {}\n# config_sha256: {}\n",
                meta.tool, meta.version, meta.task, meta.seed, meta.config_sha256
            );
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io {
                path: "csv".into(),
                message: e.to_string(),
            };
            w.write_record(&table.header).map_err(io)?;
            for row in &table.rows {
                w.write_record(row).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io {
                path: "csv".into(),
                message: e.to_string(),
            })?;
            out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
            Ok(out)
        }
    }
}

pub fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io {
                    path: "stdout".into(),
                    message: e.to_string(),
                })
        }
    }
}
