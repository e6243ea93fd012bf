use crate::error::{Error, Result};
use crate::labels::check_permutation;

use super::{Mixture, Waveform};

/// Relative guard for the SDR ratio. Bounds the metric to `±SDR_CAP_DB`.
pub const SDR_GUARD: f64 = 1e-10;
pub const SDR_CAP_DB: f64 = 100.0;

pub const DEFAULT_ENERGY_FRAME: usize = 32;
pub const DEFAULT_SILENCE_MARGIN_DB: f64 = 40.0;

const POWER_GUARD: f64 = 1e-12;

/// Sufficient statistics of one SDR evaluation, kept for the analytic gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrTerms {
    /// `<s, ŝ>`
    pub dot: f64,
    /// `‖s‖²`
    pub ref_power: f64,
    /// `‖ŝ‖²`
    pub est_power: f64,
    /// Metric value in dB after the guard.
    pub db: f64,
    /// True when the guard is active (value pinned at the cap or floor).
    pub clamped: bool,
}

impl SdrTerms {
    /// Gradient of the dB value with respect to the estimate, written into `out`.
    /// Zero inside the clamped region.
    pub fn grad_estimate(&self, reference: &[f64], estimate: &[f64], scale: f64, out: &mut [f64]) {
        if self.clamped {
            return;
        }
        let den = self.ref_power * self.est_power - self.dot * self.dot;
        let k = scale * 10.0 / std::f64::consts::LN_10;
        let a = 2.0 / self.dot + 2.0 * self.dot / den;
        let b = 2.0 * self.ref_power / den;
        for ((o, s), y) in out.iter_mut().zip(reference).zip(estimate) {
            *o += k * (a * s - b * y);
        }
    }
}

/// Scale-invariant SDR `10·log10(<s,ŝ>² / (‖s‖²‖ŝ‖² − <s,ŝ>²))` with the
/// symmetric guard, plus the terms needed to differentiate it.
pub fn sdr_terms(reference: &[f64], estimate: &[f64]) -> Result<SdrTerms> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch { left: reference.len(), right: estimate.len() });
    }
    let (mut dot, mut ref_power, mut est_power) = (0.0, 0.0, 0.0);
    for (s, y) in reference.iter().zip(estimate) {
        dot += s * y;
        ref_power += s * s;
        est_power += y * y;
    }
    if ref_power == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num = dot * dot;
    let den = (ref_power * est_power - num).max(0.0);
    let (db, clamped) = if num == 0.0 && den == 0.0 {
        // silent estimate
        (-SDR_CAP_DB, true)
    } else {
        let top = num.max(SDR_GUARD * den);
        let bottom = den.max(SDR_GUARD * num);
        let clamped = num < SDR_GUARD * den || den < SDR_GUARD * num;
        (10.0 * (top / bottom).log10(), clamped)
    };
    Ok(SdrTerms { dot, ref_power, est_power, db, clamped })
}

pub fn sdr(reference: &Waveform, estimate: &Waveform) -> Result<f64> {
    sdr_terms(reference.samples(), estimate.samples()).map(|t| t.db)
}

/// Mean over output channels of the SDR gain of each estimate over the raw
/// mixture, pairing channel `c` with source `perm[c]`.
pub fn sdr_improvement(mixture: &Mixture, estimates: &[Waveform], perm: &[usize]) -> Result<f64> {
    let n = mixture.num_sources();
    check_permutation(perm, n)?;
    if estimates.len() != n {
        return Err(Error::ShapeMismatch(format!("{} estimates for {n} sources", estimates.len())));
    }
    let mut total = 0.0;
    for (est, &j) in estimates.iter().zip(perm) {
        let src = &mixture.sources[j];
        if est.len() != src.len() {
            return Err(Error::LengthMismatch { left: src.len(), right: est.len() });
        }
        total += sdr(src, est)? - sdr(src, &mixture.mix)?;
    }
    Ok(total / n as f64)
}

/// Per-frame energy in dB over non-overlapping frames; a trailing partial frame is dropped.
pub fn frame_energies(w: &Waveform, frame_len: usize) -> Result<Vec<f64>> {
    if frame_len == 0 {
        return Err(Error::InvalidConfig("frame_len must be at least 1".into()));
    }
    let frames: Vec<f64> = w
        .samples()
        .chunks_exact(frame_len)
        .map(|f| {
            let ms = f.iter().map(|x| x * x).sum::<f64>() / frame_len as f64;
            10.0 * (ms + POWER_GUARD).log10()
        })
        .collect();
    if frames.is_empty() {
        return Err(Error::EmptyWaveform);
    }
    Ok(frames)
}

/// Average energy over the frames within `silence_margin_db` of the loudest one.
pub fn average_active_energy(w: &Waveform, frame_len: usize, silence_margin_db: f64) -> Result<f64> {
    let energies = frame_energies(w, frame_len)?;
    let floor = 10.0 * POWER_GUARD.log10();
    let peak = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak <= floor + 1e-9 {
        return Err(Error::NoActiveFrames);
    }
    let threshold = peak - silence_margin_db;
    let (sum, count) = energies
        .iter()
        .filter(|&&e| e >= threshold)
        .fold((0.0, 0usize), |(s, c), &e| (s + 10f64.powf(e / 10.0), c + 1));
    Ok(10.0 * (sum / count as f64).log10())
}
