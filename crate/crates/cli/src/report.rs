//! Reports: a JSON document and an aligned text rendering of it, plus CSV
//! tables, all written to one output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const JSON_NAME: &str = "report.json";
pub const TEXT_NAME: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub result: Value,
    /// CSV files written next to the report.
    pub tables: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Io(format!("malformed report: {e}")))
    }

    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("reports serialize");
        let mut rows = Vec::new();
        flatten("", &value, &mut rows);
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<width$}  {v}");
        }
        s
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&key(k), child, out);
            }
        }
        Value::Array(items) => {
            if let Some(parts) = items.iter().map(scalar).collect::<Option<Vec<_>>>() {
                out.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
            } else {
                for (i, child) in items.iter().enumerate() {
                    flatten(&key(&i.to_string()), child, out);
                }
            }
        }
        _ => out.push((prefix.to_string(), scalar(v).unwrap_or_default())),
    }
}

/// Writes the report in both formats and the tables, returning every path.
pub fn emit_report(report: &Report, tables: &[(String, String)], dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = vec![(JSON_NAME.to_string(), report.to_json()), (TEXT_NAME.to_string(), report.to_text())];
    files.extend(tables.iter().cloned());
    let mut paths = Vec::with_capacity(files.len());
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io(&p, e))?;
        paths.push(p);
    }
    Ok(paths)
}
