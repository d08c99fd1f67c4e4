//! Plot-ready CSV emission: melts the wide per-run data files of a finished
//! run directory into one long-format table (series, row, variable, value).
//! No rendering happens here; the output is meant for external plotting
//! tools.

use std::fs;
use std::path::Path;

use crate::artifacts::write_atomic;

pub fn emit_plots(run_dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut emitted = Vec::new();
    let plot_dir = run_dir.join("plots");
    let mut entries: Vec<_> = fs::read_dir(run_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        anyhow::bail!("no CSV artifacts in {}", run_dir.display());
    }

    let mut long = String::from("series,row,variable,value\n");
    for path in &entries {
        let series = path.file_stem().unwrap().to_string_lossy().into_owned();
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let Some(header) = lines.next() else { continue };
        let columns: Vec<&str> = header.split(',').collect();
        for (row_idx, line) in lines.enumerate() {
            for (col, cell) in columns.iter().zip(line.split(',')) {
                // numeric cells only; tag columns are skipped
                if let Ok(v) = cell.parse::<f64>() {
                    long.push_str(&format!("{series},{row_idx},{col},{v}\n"));
                }
            }
        }
    }
    let out = plot_dir.join("long.csv");
    write_atomic(&out, &long)?;
    emitted.push(out.display().to_string());
    Ok(emitted)
}
