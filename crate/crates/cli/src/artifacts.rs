//! Deterministic artifact writers: CSV data files plus a JSON run summary.
//! Every file is written atomically (temp file + rename) and floats are
//! rendered with the shortest round-trip representation, so identical
//! inputs produce byte-identical data files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render a CSV table with a header row.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Render a CSV table with leading string columns.
pub fn csv_table_tagged(header: &[&str], rows: &[(Vec<String>, Vec<f64>)]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (tags, values) in rows {
        let mut cells = tags.clone();
        cells.extend(values.iter().map(|v| format!("{v}")));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    /// "below" when measured must stay under the threshold, "above" when it
    /// must exceed it, "within" for closed ranges encoded in the name.
    pub direction: String,
}

impl CheckResult {
    pub fn below(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            pass: measured < threshold,
            measured,
            threshold,
            direction: "below".into(),
        }
    }

    pub fn above(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            pass: measured > threshold,
            measured,
            threshold,
            direction: "above".into(),
        }
    }

    pub fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        CheckResult {
            name: format!("{} (range {lo}..{hi})", name.into()),
            pass: (lo..=hi).contains(&measured),
            measured,
            threshold: hi,
            direction: "within".into(),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        CheckResult {
            name: name.into(),
            pass,
            measured: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            direction: "flag".into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub description: String,
    /// The only field allowed to differ between reruns.
    pub timestamp_unix: u64,
    pub model: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    pub all_passed: bool,
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> anyhow::Result<PathBuf> {
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary)?;
    write_atomic(&path, &text)?;
    Ok(path)
}
