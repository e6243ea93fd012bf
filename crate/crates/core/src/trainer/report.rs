use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::AssignmentTable;

pub const EPOCH_CSV_HEADER: &str = "global_epoch,section,mode,mean_train_loss,valid_sdri_db,switch_count,switch_pct";

/// Telemetry of one training epoch. Switch fields are empty for the first epoch of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub global_epoch: usize,
    /// 1-based section number.
    pub section: usize,
    pub mode: String,
    pub mean_train_loss: f64,
    pub valid_sdri_db: f64,
    pub switch_count: Option<usize>,
    pub switch_pct: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub approach: String,
    /// `fixed`, `dyn` or `csc`.
    pub labels_kind: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub records: Vec<EpochRecord>,
    pub final_valid_sdri_db: f64,
    pub final_test_sdri_db: Option<f64>,
    /// Label tables of the run: `final`, `recorded`, and any fixed-label source.
    pub tables: BTreeMap<String, AssignmentTable>,
    /// Key into `tables` of the labels that characterize the approach.
    pub label_table: String,
    /// Percentage of mixtures whose `label_table` entry differs from the reference run's final table.
    pub diff_labels_pct: Option<f64>,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunReport {
    pub fn epochs_csv(&self) -> String {
        let mut out = String::from(EPOCH_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.global_epoch,
                r.section,
                r.mode,
                r.mean_train_loss,
                r.valid_sdri_db,
                opt(r.switch_count),
                opt(r.switch_pct)
            )
            .expect("write to String");
        }
        out
    }

    pub fn labels(&self) -> Result<&AssignmentTable> {
        self.tables
            .get(&self.label_table)
            .ok_or_else(|| Error::format("run report", format!("no '{}' table", self.label_table)))
    }

    pub fn final_table(&self) -> Result<&AssignmentTable> {
        self.tables.get("final").ok_or_else(|| Error::format("run report", "no final table"))
    }

    /// Section boundaries as the global epoch of each section's last epoch.
    pub fn section_ends(&self) -> Vec<usize> {
        let mut ends: Vec<usize> = Vec::new();
        for w in self.records.windows(2) {
            if w[0].section != w[1].section {
                ends.push(w[0].global_epoch);
            }
        }
        if let Some(last) = self.records.last() {
            ends.push(last.global_epoch);
        }
        ends
    }

    pub fn mean_switch_pct(&self, epochs: std::ops::Range<usize>) -> Option<f64> {
        let vals: Vec<f64> = self.records.get(epochs)?.iter().filter_map(|r| r.switch_pct).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}
