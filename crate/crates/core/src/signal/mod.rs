//! Sampled signals, synthetic two-speaker mixtures and separation metrics.

mod io;
mod metrics;
mod synth;

pub use io::{decode_dataset, encode_dataset, read_dataset, write_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use metrics::{
    average_active_energy, frame_energies, sdr, sdr_improvement, sdr_terms, SdrTerms,
    DEFAULT_ENERGY_FRAME, DEFAULT_SILENCE_MARGIN_DB, SDR_CAP_DB, SDR_GUARD,
};
pub use synth::{draw_speakers, synthesize_dataset, synthesize_split, SpeakerProfile, SynthConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mono signal. Samples are unitless amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub const DEFAULT_RATE: u32 = 8000;

    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyWaveform);
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::format("waveform", format!("non-finite sample at {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, Self::DEFAULT_RATE)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn power(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

/// A mixture with its ordered reference sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub id: usize,
    pub mix: Waveform,
    pub sources: Vec<Waveform>,
    pub speaker_ids: Vec<u32>,
}

impl Mixture {
    /// Builds a mixture whose `mix` is the sample-wise sum of `sources`.
    pub fn from_sources(id: usize, sources: Vec<Waveform>, speaker_ids: Vec<u32>) -> Result<Self> {
        if sources.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a mixture needs at least 2 sources, got {}",
                sources.len()
            )));
        }
        if speaker_ids.len() != sources.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} speaker ids for {} sources",
                speaker_ids.len(),
                sources.len()
            )));
        }
        let len = sources[0].len();
        for s in &sources[1..] {
            if s.len() != len {
                return Err(Error::LengthMismatch { left: len, right: s.len() });
            }
        }
        let mut mix = vec![0.0; len];
        for s in &sources {
            for (m, x) in mix.iter_mut().zip(s.samples()) {
                *m += x;
            }
        }
        let rate = sources[0].sample_rate();
        Ok(Self { id, mix: Waveform::new(mix, rate)?, sources, speaker_ids })
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn len(&self) -> usize {
        self.mix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mix.is_empty()
    }

    /// Same mixture with its stored source order permuted: new source `j` is old `order[j]`.
    pub fn reordered(&self, order: &[usize]) -> Mixture {
        Mixture {
            id: self.id,
            mix: self.mix.clone(),
            sources: order.iter().map(|&j| self.sources[j].clone()).collect(),
            speaker_ids: order.iter().map(|&j| self.speaker_ids[j]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub mixtures: Vec<Mixture>,
    pub split: Split,
}

impl Dataset {
    /// Checks that ids are dense in `[0, T)` and that all mixtures share one shape.
    pub fn new(mixtures: Vec<Mixture>, split: Split) -> Result<Self> {
        for (i, m) in mixtures.iter().enumerate() {
            if m.id != i {
                return Err(Error::format("dataset", format!("mixture at position {i} has id {}", m.id)));
            }
        }
        if let Some(first) = mixtures.first() {
            for m in &mixtures {
                if m.num_sources() != first.num_sources() {
                    return Err(Error::ShapeMismatch("mixtures with different source counts".into()));
                }
                if m.len() != first.len() {
                    return Err(Error::LengthMismatch { left: first.len(), right: m.len() });
                }
            }
        }
        Ok(Self { mixtures, split })
    }

    pub fn len(&self) -> usize {
        self.mixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mixtures.is_empty()
    }

    pub fn num_sources(&self) -> usize {
        self.mixtures.first().map_or(0, Mixture::num_sources)
    }

    pub fn samples_per_utt(&self) -> usize {
        self.mixtures.first().map_or(0, Mixture::len)
    }
}
