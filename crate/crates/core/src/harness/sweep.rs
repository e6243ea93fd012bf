use std::collections::BTreeMap;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{diff_labels, AssignmentTable};
use crate::trainer::{run_schedule, run_section, validate, Preset, TrainState};

use super::{create_dir, load_datasets, write_file, ExperimentConfig};

pub const SWEEP_HEADER: &str = "L,valid_sdri_db,test_sdri_db,diff_vs_ref_pct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l: usize,
    pub valid_sdri_db: f64,
    pub test_sdri_db: f64,
    /// Percentage of mixtures whose epoch-L label differs from the epoch-`ref_l` label.
    pub diff_vs_ref_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub seed: u64,
    pub ref_l: usize,
    pub rows: Vec<SweepRow>,
    /// Labels recorded at each requested L.
    pub tables: BTreeMap<usize, AssignmentTable>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_HEADER}\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.l, r.valid_sdri_db, r.test_sdri_db, r.diff_vs_ref_pct).expect("write to String");
        }
        out
    }
}

/// Records labels at every requested epoch L of one shared PIT run, then
/// trains a fresh model on each recorded table for `config.epochs` epochs.
///
/// Each cell reproduces the second section of `fixed-from-pit` with that L
/// exactly. Results go to `<out_dir>/sweep-seed<seed>/`.
pub fn cmd_sweep_l(config: &ExperimentConfig, l_values: &[usize], ref_l: usize, seed: u64) -> Result<SweepResult> {
    config.validate()?;
    if l_values.is_empty() {
        return Err(Error::InvalidConfig("at least one L value is required".into()));
    }
    if l_values.contains(&0) || ref_l == 0 {
        return Err(Error::InvalidConfig("L values must be at least 1".into()));
    }
    let data = load_datasets(config)?;
    let max_l = l_values.iter().copied().chain([ref_l]).max().expect("non-empty");
    let pit = config.schedule(Preset::Pit, seed);
    let pit = crate::trainer::Schedule { sections: Preset::Pit.sections(max_l, max_l), ..pit };
    let (_, shared) = run_schedule(&pit, &config.separator(), &data.train, &data.valid, None)?;
    let reference = shared.snapshots[ref_l - 1].clone();

    let schedule = config.schedule(Preset::FixedFromPit, seed);
    let fixed_section = &schedule.sections[1];
    let cells = l_values
        .par_iter()
        .map(|&l| {
            let recorded = shared.snapshots[l - 1].clone();
            let mut state = TrainState {
                global_epoch: l,
                recorded: Some(recorded.clone()),
                snapshots: shared.snapshots[..l].to_vec(),
                ..shared.clone()
            };
            let records = run_section(&mut state, fixed_section, 1, &schedule, &data.train, &data.valid)?;
            let valid_sdri_db = match records.last() {
                Some(r) => r.valid_sdri_db,
                None => validate(&state.params, &data.valid)?,
            };
            let row = SweepRow {
                l,
                valid_sdri_db,
                test_sdri_db: validate(&state.params, &data.test)?,
                diff_vs_ref_pct: diff_labels(&recorded, &reference)?,
            };
            Ok((row, recorded))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut result = SweepResult { seed, ref_l, rows: Vec::new(), tables: BTreeMap::new() };
    for (row, table) in cells {
        result.tables.insert(row.l, table);
        result.rows.push(row);
    }
    let dir = config.sweep_dir(seed);
    create_dir(&dir)?;
    write_file(&dir.join("sweep.csv"), result.to_csv())?;
    for (l, table) in &result.tables {
        write_file(&dir.join("labels").join(format!("L{l}.csv")), table.to_csv())?;
    }
    write_file(&dir.join("reference.csv"), reference.to_csv())?;
    Ok(result)
}
