//! Experiment plumbing behind the CLI: dataset generation, label tables,
//! training runs, L sweeps and report aggregation. Every command is a pure
//! function of its inputs, so reruns reproduce their files byte for byte.

mod config;
mod report;
mod sweep;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{diff_labels, embedding_assignment, energy_assignment, Assignment, AssignmentTable};
use crate::separator::write_checkpoint;
use crate::signal::{draw_speakers, read_dataset, synthesize_split, write_dataset, Dataset, SpeakerProfile, Split};
use crate::trainer::{run_schedule, LabelConfig, Preset, RunReport};

pub use config::{DataSpec, ExperimentConfig};
pub use report::{cmd_report, write_report, ReportOutput, ReportRow, REPORT_HEADER};
pub use sweep::{cmd_sweep_l, SweepResult, SweepRow, SWEEP_HEADER};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSplit {
    pub split: Split,
    pub file: String,
    pub mixtures: usize,
}

/// Describes a generated dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub data: DataSpec,
    pub speakers: Vec<SpeakerProfile>,
    pub splits: Vec<ManifestSplit>,
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn split_file(split: Split) -> String {
    format!("{}.pitd", split.as_str())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Datasets {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

impl Datasets {
    fn splits(&self) -> [&Dataset; 3] {
        [&self.train, &self.valid, &self.test]
    }
}

/// Draws the speaker pool and the three splits of `config` in memory.
pub fn synthesize(config: &ExperimentConfig) -> Result<(Vec<SpeakerProfile>, Datasets)> {
    config.validate()?;
    let speakers = draw_speakers(config.num_speakers, config.num_bands, config.data_seed)?;
    let split = |split, count| {
        synthesize_split(&speakers, count, config.samples_per_utt, config.gain_range_db, split, config.data_seed)
    };
    let data = Datasets {
        train: split(Split::Train, config.t_train)?,
        valid: split(Split::Valid, config.t_valid)?,
        test: split(Split::Test, config.t_test)?,
    };
    Ok((speakers, data))
}

/// Synthesizes train/valid/test from one shared speaker pool into
/// `<out_dir>/data` and returns the manifest.
pub fn cmd_gen_data(config: &ExperimentConfig) -> Result<Manifest> {
    let (speakers, data) = synthesize(config)?;
    let dir = config.data_dir();
    create_dir(&dir)?;
    let mut splits = Vec::new();
    for d in data.splits() {
        let file = split_file(d.split);
        write_dataset(&dir.join(&file), d)?;
        splits.push(ManifestSplit { split: d.split, file, mixtures: d.len() });
    }
    let manifest = Manifest { data: config.data_spec(), speakers, splits };
    write_file(&dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Loads the datasets written by [`cmd_gen_data`] for `config`.
pub fn load_datasets(config: &ExperimentConfig) -> Result<Datasets> {
    let dir = config.data_dir();
    let manifest: Manifest = serde_json::from_str(&read_text(&dir.join(MANIFEST_FILE))?)?;
    if manifest.data != config.data_spec() {
        return Err(Error::InvalidConfig(format!(
            "datasets in {} were generated from different settings; rerun gen-data",
            dir.display()
        )));
    }
    let load = |split| read_dataset(&dir.join(split_file(split)), split);
    Ok(Datasets { train: load(Split::Train)?, valid: load(Split::Valid)?, test: load(Split::Test)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelStrategy {
    Energy,
    Embed,
}

impl LabelStrategy {
    pub fn name(self) -> &'static str {
        match self {
            LabelStrategy::Energy => "energy",
            LabelStrategy::Embed => "embed",
        }
    }
}

impl fmt::Display for LabelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(LabelStrategy::Energy),
            "embed" => Ok(LabelStrategy::Embed),
            _ => Err(Error::InvalidConfig(format!("unknown label strategy '{s}' (expected energy or embed)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub objective: f64,
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub strategy: String,
    pub mixtures: usize,
    /// Mixtures whose second source goes to channel 0.
    pub swapped: usize,
    pub cluster: Option<ClusterSummary>,
}

#[derive(Debug, Clone)]
pub struct LabelsOutcome {
    pub table: AssignmentTable,
    pub summary: LabelSummary,
    pub table_path: PathBuf,
    pub summary_path: PathBuf,
}

fn split_from_path(path: &Path) -> Split {
    match path.file_stem().and_then(|s| s.to_str()) {
        Some("valid") => Split::Valid,
        Some("test") => Split::Test,
        _ => Split::Train,
    }
}

/// Computes a label table for a dataset file and writes it as CSV, with a
/// JSON summary next to it. Without `out` the table lands beside the dataset
/// as `<stem>.<strategy>.csv`.
pub fn cmd_labels(
    dataset: &Path,
    strategy: LabelStrategy,
    labels: &LabelConfig,
    out: Option<&Path>,
) -> Result<LabelsOutcome> {
    let d = read_dataset(dataset, split_from_path(dataset))?;
    let (table, cluster) = match strategy {
        LabelStrategy::Energy => (energy_assignment(&d, labels.energy_frame_len, labels.silence_margin_db)?, None),
        LabelStrategy::Embed => {
            let (state, table) = embedding_assignment(&d, &labels.embedding, &labels.cluster)?;
            let summary = ClusterSummary {
                objective: state.objective,
                objective_history: state.objective_history,
                iterations: state.iterations,
                converged: state.converged,
            };
            (table, Some(summary))
        }
    };
    let identity = Assignment::identity(2);
    let summary = LabelSummary {
        strategy: strategy.name().to_string(),
        mixtures: table.len(),
        swapped: table.entries.iter().filter(|a| **a != identity).count(),
        cluster,
    };
    let table_path = match out {
        Some(p) => p.to_path_buf(),
        None => dataset.with_extension(format!("{}.csv", strategy.name())),
    };
    let summary_path = table_path.with_extension("json");
    write_file(&table_path, table.to_csv())?;
    write_file(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(LabelsOutcome { table, summary, table_path, summary_path })
}

/// Files of a training run directory.
pub mod run_files {
    pub const EPOCHS: &str = "epochs.csv";
    pub const REPORT: &str = "report.json";
    pub const LABELS: &str = "labels.csv";
    pub const FINAL_TABLE: &str = "final_table.csv";
    pub const MODEL: &str = "model.pitm";
    pub const SNAPSHOTS: &str = "snapshots";
}

fn label_table_key(preset: Preset) -> &'static str {
    match preset {
        Preset::Pit | Preset::Cascade => "final",
        Preset::FixedEnergy => "energy",
        Preset::FixedEmbed => "embedding",
        Preset::FixedFromPit => "recorded",
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub report: RunReport,
}

/// Trains one preset with one seed on the generated datasets and writes the
/// run directory. When the cascade run of the same seed already exists, the
/// report carries the label difference against its final table.
pub fn cmd_train(config: &ExperimentConfig, preset: Preset, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let data = load_datasets(config)?;
    let schedule = config.schedule(preset, seed);
    let (mut report, state) = run_schedule(&schedule, &config.separator(), &data.train, &data.valid, Some(&data.test))?;
    report.approach = preset.name().to_string();
    report.labels_kind = preset.labels_kind().to_string();
    report.seed = seed;
    report.config = serde_json::to_value(config)?;
    report.label_table = label_table_key(preset).to_string();

    let run_dir = config.run_dir(preset, seed);
    let reference = if preset == Preset::Cascade {
        Some(report.final_table()?.clone())
    } else {
        let path = config.run_dir(Preset::Cascade, seed).join(run_files::FINAL_TABLE);
        if path.exists() {
            Some(AssignmentTable::read(&path)?)
        } else {
            None
        }
    };
    report.diff_labels_pct = reference.map(|r| diff_labels(report.labels()?, &r)).transpose()?;

    create_dir(&run_dir)?;
    let snapshots = run_dir.join(run_files::SNAPSHOTS);
    if snapshots.exists() {
        fs::remove_dir_all(&snapshots).map_err(|e| Error::io(&snapshots, e))?;
    }
    for table in &state.snapshots {
        let epoch = table.epoch_tag.unwrap_or_default();
        write_file(&snapshots.join(format!("epoch_{epoch:04}.csv")), table.to_csv())?;
    }
    write_file(&run_dir.join(run_files::EPOCHS), report.epochs_csv())?;
    write_file(&run_dir.join(run_files::LABELS), report.labels()?.to_csv())?;
    write_file(&run_dir.join(run_files::FINAL_TABLE), report.final_table()?.to_csv())?;
    write_checkpoint(&run_dir.join(run_files::MODEL), &state.params, &state.separator)?;
    write_file(&run_dir.join(run_files::REPORT), serde_json::to_string_pretty(&report)?)?;
    Ok(TrainOutcome { run_dir, report })
}

pub fn read_run_report(run_dir: &Path) -> Result<RunReport> {
    Ok(serde_json::from_str(&read_text(&run_dir.join(run_files::REPORT))?)?)
}
