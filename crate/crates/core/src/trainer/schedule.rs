use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{AssignmentTable, ClusterConfig, EmbeddingConfig};
use crate::separator::AdamConfig;
use crate::signal::{DEFAULT_ENERGY_FRAME, DEFAULT_SILENCE_MARGIN_DB};

/// Where a fixed-label section takes its table from.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource {
    /// The table snapshotted by the latest `record_at_end` section.
    Recorded,
    Energy,
    Embedding,
    Table(AssignmentTable),
}

impl LabelSource {
    pub fn name(&self) -> &'static str {
        match self {
            LabelSource::Recorded => "recorded",
            LabelSource::Energy => "energy",
            LabelSource::Embedding => "embedding",
            LabelSource::Table(_) => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionMode {
    Pit,
    Fixed(LabelSource),
}

impl SectionMode {
    pub fn name(&self) -> &'static str {
        match self {
            SectionMode::Pit => "pit",
            SectionMode::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionSpec {
    pub mode: SectionMode,
    pub epochs: usize,
    pub reinit_model: bool,
    pub reset_optimizer: bool,
    pub record_at_end: bool,
}

impl SectionSpec {
    pub fn pit(epochs: usize) -> Self {
        Self { mode: SectionMode::Pit, epochs, reinit_model: false, reset_optimizer: false, record_at_end: false }
    }

    pub fn fixed(source: LabelSource, epochs: usize) -> Self {
        Self {
            mode: SectionMode::Fixed(source),
            epochs,
            reinit_model: true,
            reset_optimizer: true,
            record_at_end: false,
        }
    }
}

/// Settings for the parameter-free label strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelConfig {
    pub energy_frame_len: usize,
    pub silence_margin_db: f64,
    pub embedding: EmbeddingConfig,
    pub cluster: ClusterConfig,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            energy_frame_len: DEFAULT_ENERGY_FRAME,
            silence_margin_db: DEFAULT_SILENCE_MARGIN_DB,
            embedding: EmbeddingConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub sections: Vec<SectionSpec>,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffles and every section's model initialization.
    pub seed: u64,
    pub adam: AdamConfig,
    pub labels: LabelConfig,
}

impl Schedule {
    pub const DEFAULT_BATCH: usize = 8;

    pub fn new(sections: Vec<SectionSpec>, seed: u64) -> Self {
        Self {
            sections,
            batch_size: Self::DEFAULT_BATCH,
            seed,
            adam: AdamConfig::default(),
            labels: LabelConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sections.is_empty() {
            return Err(Error::InvalidConfig("a schedule needs at least one section".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        let mut recorded = false;
        for (i, s) in self.sections.iter().enumerate() {
            if s.mode == SectionMode::Fixed(LabelSource::Recorded) && !recorded {
                return Err(Error::InvalidConfig(format!(
                    "section {} uses recorded labels but no earlier section records them",
                    i + 1
                )));
            }
            recorded |= s.record_at_end;
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.sections.iter().map(|s| s.epochs).sum()
    }
}

/// Named schedules of the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Pit,
    FixedEnergy,
    FixedEmbed,
    FixedFromPit,
    Cascade,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::FixedEnergy, Preset::FixedEmbed, Preset::Pit, Preset::FixedFromPit, Preset::Cascade];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Pit => "pit",
            Preset::FixedEnergy => "fixed-energy",
            Preset::FixedEmbed => "fixed-embed",
            Preset::FixedFromPit => "fixed-from-pit",
            Preset::Cascade => "cascade",
        }
    }

    /// Kind of labels the approach trains on: fixed, dynamic, or cascaded.
    pub fn labels_kind(self) -> &'static str {
        match self {
            Preset::Pit => "dyn",
            Preset::FixedEnergy | Preset::FixedEmbed | Preset::FixedFromPit => "fixed",
            Preset::Cascade => "csc",
        }
    }

    /// Sections for a first PIT section of `pit_epochs` (L) and `epochs` (E)
    /// for every other section.
    ///
    /// * `pit`: PIT(E)
    /// * `fixed-energy` / `fixed-embed`: FIXED(E)
    /// * `fixed-from-pit`: PIT(L, record) then FIXED(recorded, reinit, E)
    /// * `cascade`: `fixed-from-pit` then PIT(E) on the carried model with fresh moments
    pub fn sections(self, pit_epochs: usize, epochs: usize) -> Vec<SectionSpec> {
        let first_pit = SectionSpec { reinit_model: true, reset_optimizer: true, ..SectionSpec::pit(pit_epochs) };
        match self {
            Preset::Pit => vec![SectionSpec { epochs, ..first_pit }],
            Preset::FixedEnergy => vec![SectionSpec::fixed(LabelSource::Energy, epochs)],
            Preset::FixedEmbed => vec![SectionSpec::fixed(LabelSource::Embedding, epochs)],
            Preset::FixedFromPit => vec![
                SectionSpec { record_at_end: true, ..first_pit },
                SectionSpec::fixed(LabelSource::Recorded, epochs),
            ],
            Preset::Cascade => {
                let mut s = Preset::FixedFromPit.sections(pit_epochs, epochs);
                s.push(SectionSpec { reset_optimizer: true, ..SectionSpec::pit(epochs) });
                s
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{s}'")))
    }
}
