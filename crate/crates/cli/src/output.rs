//! CSV rendering and the run manifest.

use std::path::Path;

use casimir_gain::numerics::QuadratureSpec;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::scenario::SweepDoc;
use crate::tasks::Table;

/// The whole CSV document; rows use `{:.12e}`.
pub fn csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        InputRecord {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub task: &'static str,
    pub inputs: &'a [InputRecord],
    pub tolerances: QuadratureSpec,
    /// Kelvin; absent means zero temperature.
    pub temperature: Option<f64>,
    pub allow_gain_stack: bool,
    pub sweep: Option<&'a SweepDoc>,
    pub columns: &'a [&'static str],
    pub rows: usize,
    pub row_errors: &'a [f64],
}

impl Manifest<'_> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
