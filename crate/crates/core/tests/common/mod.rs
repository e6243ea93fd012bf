//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use pitflex::separator::{init_params, loss, SeparatorConfig, SeparatorParams};
use pitflex::signal::{draw_speakers, synthesize_split, Dataset, Mixture, Split, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn waveform(v: Vec<f64>) -> Waveform {
    Waveform::from_samples(v).unwrap()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Scale-invariant SDR evaluated through the Lagrange identity
/// `‖s‖²‖y‖² − <s,y>² = ½ ΣᵢΣⱼ (sᵢyⱼ − sⱼyᵢ)²` with compensated sums, so the
/// denominator never suffers cancellation.
pub fn sdr_oracle(s: &[f64], y: &[f64]) -> f64 {
    let dot = compensated_sum(s.iter().zip(y).map(|(a, b)| a * b));
    let mut cross = Vec::with_capacity(s.len() * s.len() / 2);
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let d = s[i] * y[j] - s[j] * y[i];
            cross.push(d * d);
        }
    }
    let den = compensated_sum(cross);
    10.0 * (dot * dot).log10() - 10.0 * den.log10()
}

/// Projection form: `10·log10(‖αs‖² / ‖y − αs‖²)` with `α = <s,y>/‖s‖²`.
pub fn si_snr_projection(s: &[f64], y: &[f64]) -> f64 {
    let dot = compensated_sum(s.iter().zip(y).map(|(a, b)| a * b));
    let ss = compensated_sum(s.iter().map(|a| a * a));
    let alpha = dot / ss;
    let target = compensated_sum(s.iter().map(|a| (alpha * a) * (alpha * a)));
    let noise = compensated_sum(s.iter().zip(y).map(|(a, b)| (b - alpha * a) * (b - alpha * a)));
    10.0 * (target / noise).log10()
}

pub fn small_config(seed: u64) -> SeparatorConfig {
    SeparatorConfig { frame_len: 8, latent_dim: 6, hidden_dim: 7, num_channels: 2, init_scale: 0.5, seed }
}

pub fn datasets(train: usize, valid: usize, len: usize, seed: u64) -> (Dataset, Dataset) {
    let speakers = draw_speakers(8, 8, seed).unwrap();
    (
        synthesize_split(&speakers, train, len, (-2.5, 2.5), Split::Train, seed).unwrap(),
        synthesize_split(&speakers, valid, len, (-2.5, 2.5), Split::Valid, seed).unwrap(),
    )
}

pub fn mixture(len: usize, seed: u64) -> Mixture {
    datasets(1, 1, len, seed).0.mixtures.remove(0)
}

/// Central-difference derivative of the loss with respect to every parameter.
pub fn finite_difference(params: &SeparatorParams, m: &Mixture, perm: &[usize], step: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for t in 0..6 {
        let len = params.tensors()[t].len();
        let mut g = Vec::with_capacity(len);
        for i in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[t][i] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[t][i] -= step;
            let lp = loss(&plus, m, perm).unwrap().0;
            let lm = loss(&minus, m, perm).unwrap().0;
            g.push((lp - lm) / (2.0 * step));
        }
        out.push(g);
    }
    out
}

pub fn init(config: &SeparatorConfig) -> SeparatorParams {
    init_params(config).unwrap()
}
