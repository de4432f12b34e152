//! Check records, suite reports, and their JSON and CSV persistence.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Logged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    /// Measured quantities, keyed by name.
    pub value: Value,
    pub tolerance: String,
    pub runtime_s: f64,
    pub notes: Vec<String>,
}

impl CheckRecord {
    /// One-line summary: `[PASS] name (1.2 s): tolerance`.
    pub fn summary(&self) -> String {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Logged => "LOG ",
        };
        format!("[{tag}] {} ({:.1} s): {}", self.name, self.runtime_s, self.tolerance)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub metadata: Metadata,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    pub fn new(config_hash: impl Into<String>, checks: Vec<CheckRecord>) -> Self {
        Self {
            metadata: Metadata { version: env!("CARGO_PKG_VERSION").into(), config_hash: config_hash.into() },
            checks,
        }
    }

    /// No check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Pretty JSON with object keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json maps are ordered by key.
    let tree = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&tree)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_sorted_json(value)?)?;
    Ok(())
}

pub fn write_grid_csv(path: &Path, f: &GridFunction) -> Result<()> {
    f.write_csv(BufWriter::new(fs::File::create(path)?))
}
