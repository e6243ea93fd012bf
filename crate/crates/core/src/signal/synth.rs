//! Synthetic speakers and two-talker mixtures.
//!
//! A speaker is a spectral envelope over `K` equal bands of `[0, fs/2)`,
//! concentrated on 2–3 adjacent bands (its register).
//! Utterances are sums of random-phase sinusoids drawn inside the speaker's
//! bands, with one silent gap each. Samples are snapped to a 2^-16 grid so the
//! mixture sum is exact in both `f32` storage and `f64` arithmetic.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::{Dataset, Mixture, Split, Waveform};

const QUANT: f64 = 65536.0;
const TONES_PER_BAND: usize = 2;
const REFERENCE_RMS: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub speaker_id: u32,
    pub band_weights: Vec<f64>,
    pub base_amplitude: f64,
}

impl SpeakerProfile {
    pub fn num_bands(&self) -> usize {
        self.band_weights.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub num_speakers: usize,
    pub num_mixtures: usize,
    pub samples_per_utt: usize,
    pub gain_range_db: (f64, f64),
    pub num_bands: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_speakers: 8,
            num_mixtures: 200,
            samples_per_utt: 512,
            gain_range_db: (-2.5, 2.5),
            num_bands: 8,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_speakers < 2 {
            return bad("num_speakers must be at least 2");
        }
        if self.num_mixtures < 1 {
            return bad("number of mixtures must be at least 1");
        }
        if self.samples_per_utt < 16 {
            return bad("samples_per_utt must be at least 16");
        }
        if self.num_bands < 4 {
            return bad("num_bands must be at least 4");
        }
        let (lo, hi) = self.gain_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi && hi - lo <= 20.0) {
            return bad("gain_range_db must be a finite (lo, hi) with lo <= hi and width <= 20 dB");
        }
        Ok(())
    }
}

/// Draws speaker profiles with energy on 2–3 of `num_bands` bands each.
pub fn draw_speakers(num_speakers: usize, num_bands: usize, seed: u64) -> Result<Vec<SpeakerProfile>> {
    if num_speakers < 2 || num_bands < 4 {
        return Err(Error::InvalidConfig("need >= 2 speakers and >= 4 bands".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, "speakers", 0));
    let profiles = (0..num_speakers)
        .map(|id| {
            let active = rng.gen_range(2..=3);
            let lowest = rng.gen_range(0..=num_bands - active);
            let mut weights = vec![0.0; num_bands];
            for w in &mut weights[lowest..lowest + active] {
                *w = rng.gen_range(0.5..1.0);
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            SpeakerProfile {
                speaker_id: id as u32,
                band_weights: weights,
                base_amplitude: rng.gen_range(0.5..1.0),
            }
        })
        .collect();
    Ok(profiles)
}

fn utterance<R: Rng>(profile: &SpeakerProfile, len: usize, rng: &mut R) -> Vec<f64> {
    let k = profile.num_bands() as f64;
    let mut out = vec![0.0; len];
    for (band, &w) in profile.band_weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let amp = (w / TONES_PER_BAND as f64).sqrt();
        for _ in 0..TONES_PER_BAND {
            let lo = band as f64 / (2.0 * k);
            let hi = (band + 1) as f64 / (2.0 * k);
            let freq = rng.gen_range(lo..hi);
            let phase = rng.gen_range(0.0..2.0 * PI);
            for (t, o) in out.iter_mut().enumerate() {
                *o += amp * (2.0 * PI * freq * t as f64 + phase).sin();
            }
        }
    }
    let gap = rng.gen_range(0..=len / 4);
    let start = rng.gen_range(0..=len - gap);
    out[start..start + gap].iter_mut().for_each(|x| *x = 0.0);
    out
}

fn rescale_quantized(x: &mut [f64], target_rms: f64) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let g = if rms > 0.0 { target_rms / rms } else { 0.0 };
    for v in x.iter_mut() {
        *v = (*v * g * QUANT).round() / QUANT;
    }
}

/// Synthesizes one split from a fixed speaker pool.
pub fn synthesize_split(
    speakers: &[SpeakerProfile],
    num_mixtures: usize,
    samples_per_utt: usize,
    gain_range_db: (f64, f64),
    split: Split,
    seed: u64,
) -> Result<Dataset> {
    if speakers.len() < 2 {
        return Err(Error::InvalidConfig("need at least 2 speakers".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, split.as_str(), 0));
    let (lo, hi) = gain_range_db;
    let mut mixtures = Vec::with_capacity(num_mixtures);
    for id in 0..num_mixtures {
        let first = rng.gen_range(0..speakers.len());
        let mut second = rng.gen_range(0..speakers.len() - 1);
        if second >= first {
            second += 1;
        }
        let gain_db = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let mut a = utterance(&speakers[first], samples_per_utt, &mut rng);
        let mut b = utterance(&speakers[second], samples_per_utt, &mut rng);
        let rms_a = REFERENCE_RMS * speakers[first].base_amplitude;
        rescale_quantized(&mut a, rms_a);
        rescale_quantized(&mut b, rms_a * 10f64.powf(-gain_db / 20.0));
        let sources = vec![Waveform::from_samples(a)?, Waveform::from_samples(b)?];
        let ids = vec![speakers[first].speaker_id, speakers[second].speaker_id];
        mixtures.push(Mixture::from_sources(id, sources, ids)?);
    }
    Dataset::new(mixtures, split)
}

/// Draws a speaker pool and one training split from `config.seed`.
pub fn synthesize_dataset(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let speakers = draw_speakers(config.num_speakers, config.num_bands, config.seed)?;
    synthesize_split(
        &speakers,
        config.num_mixtures,
        config.samples_per_utt,
        config.gain_range_db,
        Split::Train,
        config.seed,
    )
}
