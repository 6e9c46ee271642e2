//! JSON envelopes and CSV tables.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::error::CliError;

/// Version of the report layout; bumped on any breaking change to a schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Debug gives the shortest round-trip form with '.' and exponents for extremes
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Output(e.to_string()))
    }
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    schema: String,
    schema_version: u32,
    library_version: &'static str,
    experiment: &'static str,
    seed: u64,
    config: &'a ResolvedConfig,
    result: &'a R,
}

pub fn to_json<R: Serialize>(cfg: &ResolvedConfig, result: &R) -> Result<Vec<u8>, CliError> {
    let env = Envelope {
        schema: format!("exdev-report/{}/v{SCHEMA_VERSION}", cfg.experiment.name()),
        schema_version: SCHEMA_VERSION,
        library_version: exdev::VERSION,
        experiment: cfg.experiment.name(),
        seed: cfg.seed,
        config: cfg,
        result,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&env).map_err(|e| CliError::Output(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}
