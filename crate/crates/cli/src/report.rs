//! Report envelope and emission. JSON reports are schema-versioned
//! with a stable field order; CSV payloads print 12 significant
//! digits. In serial mode the wall time is omitted so identical runs
//! produce byte-identical files.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportVerdict {
    Pass,
    Fail,
    Inconclusive,
}

impl From<pluripot::scan::Verdict> for ReportVerdict {
    fn from(v: pluripot::scan::Verdict) -> Self {
        match v {
            pluripot::scan::Verdict::Pass => ReportVerdict::Pass,
            pluripot::scan::Verdict::Fail => ReportVerdict::Fail,
            pluripot::scan::Verdict::Inconclusive => ReportVerdict::Inconclusive,
        }
    }
}

/// One named check inside a report; failures carry a locator.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub verdict: ReportVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub grid_h: Option<f64>,
    pub degree: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub serial: bool,
    /// Omitted in serial mode to keep reports byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub checks: Vec<CheckRecord>,
    pub payload: serde_json::Value,
    pub provenance: Provenance,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.verdict == ReportVerdict::Fail) {
            1
        } else if self
            .checks
            .iter()
            .any(|c| c.verdict == ReportVerdict::Inconclusive)
        {
            3
        } else {
            0
        }
    }

    pub fn write_json(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Format a float with 12 significant digits, stable across runs.
pub fn sig12(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x:.11e}")
    }
}

/// Write a CSV payload with a stable header and 12-digit numbers.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}
