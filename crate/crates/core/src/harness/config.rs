use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::separator::{AdamConfig, SeparatorConfig};
use crate::signal::SynthConfig;
use crate::trainer::{LabelConfig, Preset, Schedule};

/// Experiment configuration, read from a flat JSON object.
///
/// Every key is optional and falls back to the desk-scale defaults; unknown
/// keys are rejected.
///
/// | key | meaning |
/// |---|---|
/// | `num_speakers` | size of the speaker pool shared by all splits |
/// | `t_train`, `t_valid`, `t_test` | mixtures per split |
/// | `samples_per_utt` | samples per utterance |
/// | `gain_range_db` | `[lo, hi]` level of the second source relative to the first |
/// | `num_bands` | spectral bands of the synthetic speakers |
/// | `data_seed` | seeds the speaker pool and the three splits |
/// | `frame_len`, `latent_dim`, `hidden_dim`, `init_scale` | separator shape and init range |
/// | `pit_epochs` | L, epochs of the PIT section that records labels |
/// | `epochs` | E, epochs of every other section |
/// | `batch_size` | M, mixtures per optimizer step |
/// | `lr` | Adam step size |
/// | `seeds` | training seeds |
/// | `labels` | energy and embedding label settings (object) |
/// | `out_dir` | root of every generated file |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub num_speakers: usize,
    pub t_train: usize,
    pub t_valid: usize,
    pub t_test: usize,
    pub samples_per_utt: usize,
    pub gain_range_db: (f64, f64),
    pub num_bands: usize,
    pub data_seed: u64,
    pub frame_len: usize,
    pub latent_dim: usize,
    pub hidden_dim: usize,
    pub init_scale: f64,
    pub pit_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seeds: Vec<u64>,
    pub labels: LabelConfig,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_speakers: 8,
            t_train: 200,
            t_valid: 50,
            t_test: 50,
            samples_per_utt: 512,
            gain_range_db: (-2.5, 2.5),
            num_bands: 8,
            data_seed: 7,
            frame_len: 16,
            latent_dim: 16,
            hidden_dim: 32,
            init_scale: 0.03,
            pit_epochs: 15,
            epochs: 15,
            batch_size: 1,
            lr: 2e-3,
            seeds: vec![0, 1, 2, 3, 4],
            labels: LabelConfig::default(),
            out_dir: PathBuf::from("pitflex-out"),
        }
    }
}

/// The subset of the configuration that determines the generated datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub num_speakers: usize,
    pub t_train: usize,
    pub t_valid: usize,
    pub t_test: usize,
    pub samples_per_utt: usize,
    pub gain_range_db: (f64, f64),
    pub num_bands: usize,
    pub data_seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.t_train == 0 || self.t_valid == 0 || self.t_test == 0 {
            return bad("t_train, t_valid and t_test must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        self.synth(self.t_train).validate()?;
        self.separator().validate()
    }

    pub fn data_spec(&self) -> DataSpec {
        DataSpec {
            num_speakers: self.num_speakers,
            t_train: self.t_train,
            t_valid: self.t_valid,
            t_test: self.t_test,
            samples_per_utt: self.samples_per_utt,
            gain_range_db: self.gain_range_db,
            num_bands: self.num_bands,
            data_seed: self.data_seed,
        }
    }

    pub(crate) fn synth(&self, num_mixtures: usize) -> SynthConfig {
        SynthConfig {
            num_speakers: self.num_speakers,
            num_mixtures,
            samples_per_utt: self.samples_per_utt,
            gain_range_db: self.gain_range_db,
            num_bands: self.num_bands,
            seed: self.data_seed,
        }
    }

    pub fn separator(&self) -> SeparatorConfig {
        SeparatorConfig {
            frame_len: self.frame_len,
            latent_dim: self.latent_dim,
            hidden_dim: self.hidden_dim,
            num_channels: 2,
            init_scale: self.init_scale,
            seed: 0,
        }
    }

    pub fn schedule(&self, preset: Preset, seed: u64) -> Schedule {
        Schedule {
            batch_size: self.batch_size,
            adam: AdamConfig { lr: self.lr, ..AdamConfig::default() },
            labels: self.labels,
            ..Schedule::new(preset.sections(self.pit_epochs, self.epochs), seed)
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out_dir.join("data")
    }

    pub fn run_dir(&self, preset: Preset, seed: u64) -> PathBuf {
        self.out_dir.join("runs").join(format!("{}-seed{seed}", preset.name()))
    }

    pub fn sweep_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("sweep-seed{seed}"))
    }
}
