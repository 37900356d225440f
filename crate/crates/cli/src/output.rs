//! Output documents: a JSON envelope for single queries and CSV tables for
//! sweeps. Nothing here reads the clock, so equal inputs give equal bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION"),
            seed,
        }
    }
}

#[derive(Debug, Serialize)]
struct Envelope<'a, C: Serialize> {
    config: &'a C,
    result: &'a Value,
    provenance: Provenance,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => significant(*x, 12),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// Fixed-point decimal with `digits` significant digits.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // The exponent of the rounded value decides the number of decimals, so
    // 9.9999999999995 becomes 10.0000000000 and not 9.99999999999950.
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let exp: i64 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn json_document<C: Serialize>(config: &C, result: &Value, seed: Option<u64>) -> Result<Vec<u8>, CliError> {
    let envelope = Envelope {
        config,
        result,
        provenance: Provenance::new(seed),
    };
    let mut bytes = serde_json::to_vec_pretty(&envelope)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn csv_document(table: &Table) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

/// Writes to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Output(path.display().to_string(), e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
