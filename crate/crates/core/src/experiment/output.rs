//! CSV emission. Result rows are deterministic; wall-clock timings go to a
//! sibling `<stem>.timings.csv` so reruns reproduce the main file byte for byte.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

use super::run::StudyOutput;

/// Serialize rows with a header line.
pub fn csv_string<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `results/table.csv` → `results/table.timings.csv`.
pub fn timings_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.timings.csv"))
}

/// Write the rows to `path` and the timings next to it; returns the timings path.
pub fn write_study<R: Serialize>(path: &Path, out: &StudyOutput<R>) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, csv_string(&out.rows)?)?;
    let tp = timings_path(path);
    std::fs::write(&tp, csv_string(&out.timings)?)?;
    Ok(tp)
}
