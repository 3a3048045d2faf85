use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::U(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::text)).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().zip(r).map(|(k, v)| (k.to_string(), v.json())).collect();
                Value::Object(m)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&records).expect("records serialize");
        out.push(b'\n');
        out
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Report {
    pub table: Table,
    /// Scalar summaries recorded in the manifest.
    pub metrics: BTreeMap<String, f64>,
    /// Set when a numeric check failed; the data are still written.
    pub violation: Option<String>,
}

impl Report {
    pub fn new(table: Table) -> Self {
        Report { table, ..Default::default() }
    }

    pub fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.metrics.insert(name.into(), v);
    }

    /// Records `value` and flags a violation when it is not below `bound`.
    pub fn require_below(&mut self, name: &str, value: f64, bound: f64) {
        self.metric(name, value);
        if !(value < bound) {
            let msg = format!("{name} = {value} is not below {bound}");
            self.violation = Some(match self.violation.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub metrics: BTreeMap<String, Value>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the data and the manifest.
pub fn emit(data: &[u8], out: Option<&Path>, manifest: &RunManifest) -> Result<(), CliError> {
    let mut man = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    man.push(b'\n');
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            }
            fs::write(path, data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mp = manifest_path(path);
            fs::write(&mp, man).map_err(|e| CliError::Io(format!("{}: {e}", mp.display())))
        }
        None => {
            io::stdout().write_all(data).map_err(|e| CliError::Io(e.to_string()))?;
            io::stderr().write_all(&man).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn metric_values(m: &BTreeMap<String, f64>) -> BTreeMap<String, Value> {
    m.iter().map(|(k, v)| (k.clone(), Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null))).collect()
}
