//! Tabular reports and run manifests.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::inequalities::{format_extended, InequalityRecord};
use crate::search::SearchTrace;

pub const REPORT_COLUMNS: [&str; 8] = [
    "region_id",
    "inequality_id",
    "k",
    "lhs",
    "rhs",
    "slack",
    "precondition_met",
    "pass",
];

/// Records of one region, tagged with its id.
#[derive(Debug, Clone, Copy)]
pub struct Tagged<'a> {
    pub region_id: &'a str,
    pub record: &'a InequalityRecord,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    region_id: &'a str,
    #[serde(flatten)]
    record: &'a InequalityRecord,
}

pub fn write_records_csv<W: Write>(out: W, rows: &[Tagged<'_>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for row in rows {
        let r = row.record;
        w.write_record([
            row.region_id.to_string(),
            r.inequality_id.to_string(),
            r.k.to_string(),
            format_extended(r.lhs),
            format_extended(r.rhs),
            format_extended(r.slack),
            r.precondition_met.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_csv(rows: &[Tagged<'_>]) -> String {
    let mut buf = Vec::new();
    write_records_csv(&mut buf, rows).expect("in-memory csv");
    String::from_utf8(buf).expect("csv is utf8")
}

/// JSON array mirroring the CSV rows; infinities become `"inf"`.
pub fn records_json(rows: &[Tagged<'_>]) -> String {
    let rows: Vec<JsonRow<'_>> = rows
        .iter()
        .map(|t| JsonRow {
            region_id: t.region_id,
            record: t.record,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("records serialize");
    s.push('\n');
    s
}

pub fn trace_csv(trace: &SearchTrace) -> String {
    trace.to_csv()
}

/// Pass counts over precondition-met records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub checked: usize,
    pub passed: usize,
    pub vacuous: usize,
}

impl Summary {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a InequalityRecord>) -> Self {
        let mut s = Summary::default();
        for r in records {
            if !r.precondition_met {
                s.vacuous += 1;
            } else {
                s.checked += 1;
                if r.pass {
                    s.passed += 1;
                }
            }
        }
        s
    }

    pub fn all_pass(&self) -> bool {
        self.passed == self.checked
    }

    pub fn line(&self) -> String {
        let word = if self.all_pass() { "PASS" } else { "FAIL" };
        format!("{word} {}/{}", self.passed, self.checked)
    }
}

/// Provenance sidecar written next to each output as `<out>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: Vec::new(),
            timestamp: timestamp(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Writes the manifest beside the first output.
    pub fn write_sidecar(&self) -> io::Result<Option<PathBuf>> {
        let Some(primary) = self.outputs.first() else {
            return Ok(None);
        };
        let path = manifest_path(primary);
        std::fs::write(&path, self.to_json())?;
        Ok(Some(path))
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
