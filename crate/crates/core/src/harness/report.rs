use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::diff_labels;
use crate::trainer::{Preset, RunReport};

use super::{read_run_report, write_file};

pub const REPORT_HEADER: &str = "approach,labels,valid_sdri_db,test_sdri_db,pct_diff_labels";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub approach: String,
    pub labels: String,
    pub valid_sdri_db: f64,
    pub test_sdri_db: Option<f64>,
    pub pct_diff_labels: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub rows: Vec<ReportRow>,
    /// Per-run epoch curves as `(file name, csv)`.
    pub curves: Vec<(String, String)>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

impl ReportOutput {
    pub fn table_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.2},{},{}",
                r.approach,
                r.labels,
                r.valid_sdri_db,
                cell(r.test_sdri_db),
                cell(r.pct_diff_labels)
            )
            .expect("write to String");
        }
        out
    }
}

fn reference_for<'a>(run: &RunReport, runs: &'a [RunReport]) -> Option<&'a RunReport> {
    let cascades = || runs.iter().filter(|r| r.approach == Preset::Cascade.name());
    cascades().find(|r| r.seed == run.seed).or_else(|| cascades().next())
}

/// Merges run directories into one comparison table, one row per run in the
/// given order. Label differences are taken against the final table of the
/// cascade run with the same seed (or the first cascade run) among the
/// inputs; without any cascade run the value stored in the run is used.
pub fn cmd_report(run_dirs: &[PathBuf]) -> Result<ReportOutput> {
    if run_dirs.is_empty() {
        return Err(Error::InvalidConfig("report needs at least one run directory".into()));
    }
    let runs = run_dirs.iter().map(|d| read_run_report(d)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(runs.len());
    let mut curves = Vec::with_capacity(runs.len());
    for run in &runs {
        let pct_diff_labels = match reference_for(run, &runs) {
            Some(reference) => Some(diff_labels(run.labels()?, reference.final_table()?)?),
            None => run.diff_labels_pct,
        };
        rows.push(ReportRow {
            approach: run.approach.clone(),
            labels: run.labels_kind.clone(),
            valid_sdri_db: run.final_valid_sdri_db,
            test_sdri_db: run.final_test_sdri_db,
            pct_diff_labels,
        });
        curves.push((format!("curve_{}-seed{}.csv", run.approach, run.seed), run.epochs_csv()));
    }
    Ok(ReportOutput { rows, curves })
}

/// Writes `summary.csv` and the curve files into `dir`.
pub fn write_report(dir: &Path, output: &ReportOutput) -> Result<()> {
    write_file(&dir.join("summary.csv"), output.table_csv())?;
    for (name, csv) in &output.curves {
        write_file(&dir.join(name), csv)?;
    }
    Ok(())
}
