//! Speaker signatures: log mean band power of Hann-windowed active frames,
//! L2-normalized.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{frame_energies, Waveform, DEFAULT_ENERGY_FRAME, DEFAULT_SILENCE_MARGIN_DB};

const LOG_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub num_bands: usize,
    pub frame_len: usize,
    pub silence_margin_db: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { num_bands: 8, frame_len: DEFAULT_ENERGY_FRAME, silence_margin_db: DEFAULT_SILENCE_MARGIN_DB }
    }
}

/// Unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes `values` to unit L2 norm.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::SilentUtterance);
        }
        Ok(Self(values.into_iter().map(|x| x / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Band-energy signature of one utterance over `config.num_bands` equal bands of `[0, fs/2)`.
pub fn speaker_embedding(w: &Waveform, config: &EmbeddingConfig) -> Result<EmbeddingVector> {
    let (k, frame) = (config.num_bands, config.frame_len);
    let bins = frame / 2;
    if k == 0 || bins < k {
        return Err(Error::InvalidConfig(format!("{k} bands need a frame of at least {} samples", 2 * k)));
    }
    let energies = frame_energies(w, frame)?;
    let peak = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak <= 10.0 * LOG_GUARD.log10() + 1e-9 {
        return Err(Error::SilentUtterance);
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame);
    let mut buf = vec![Complex::new(0.0, 0.0); frame];
    let window: Vec<f64> = (0..frame)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / frame as f64).cos())
        .collect();
    let mut bands = vec![0.0; k];
    let mut active = 0usize;
    for (samples, &e) in w.samples().chunks_exact(frame).zip(&energies) {
        if e < peak - config.silence_margin_db {
            continue;
        }
        active += 1;
        for ((b, &x), wv) in buf.iter_mut().zip(samples).zip(&window) {
            *b = Complex::new(x * wv, 0.0);
        }
        fft.process(&mut buf);
        for (bin, c) in buf[..bins].iter().enumerate() {
            bands[bin * k / bins] += c.norm_sqr();
        }
    }
    // mean power per frame sample
    let scale = 1.0 / (active * frame * frame) as f64;
    EmbeddingVector::normalized(bands.into_iter().map(|e| (e * scale + LOG_GUARD).ln()).collect())
}
