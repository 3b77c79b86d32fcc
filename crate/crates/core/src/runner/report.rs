use std::path::{Path, PathBuf};

use super::{io_err, scan_records, Result};
use crate::metrics::{render_table, summarize, RobustnessSummary};

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub summary: RobustnessSummary,
    pub json: PathBuf,
    pub text: PathBuf,
}

/// Summarizes a records file into `summary.json` and `summary.txt` in
/// `out_dir` (the records' directory when `None`). A malformed last line
/// left by an interrupted run is ignored.
pub fn report(records: &Path, reference: Option<&str>, out_dir: Option<&Path>) -> Result<ReportFiles> {
    let (recs, _) = scan_records(records)?;
    let summary = summarize(&recs, reference)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| records.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let json = dir.join("summary.json");
    let text = dir.join("summary.txt");
    std::fs::write(&json, serde_json::to_string_pretty(&summary).expect("summary serializes")).map_err(io_err(&json))?;
    std::fs::write(&text, render_table(&summary)).map_err(io_err(&text))?;
    Ok(ReportFiles { summary, json, text })
}
