use crate::error::{Error, Result};
use crate::labels::check_permutation;
use crate::signal::{sdr_terms, Mixture, SdrTerms, Waveform};

use super::{Gradients, SeparatorParams};

/// Activations of one forward pass, needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    params_fingerprint: u64,
    input_fingerprint: u64,
    /// Zero-padded input, a whole number of frames.
    padded: Vec<f64>,
    input_len: usize,
    /// Per frame latent `z` (B).
    latents: Vec<Vec<f64>>,
    /// Per frame hidden activation `tanh(W1 z + b1)` (H).
    hidden: Vec<Vec<f64>>,
    /// Per frame masks, channel-major (N·B).
    masks: Vec<Vec<f64>>,
    /// Per channel estimate, trimmed to the input length.
    pub estimates: Vec<Vec<f64>>,
    loss_terms: Option<(Vec<usize>, Vec<SdrTerms>)>,
}

impl ForwardCache {
    pub fn padding(&self) -> usize {
        self.padded.len() - self.input_len
    }

    pub fn num_frames(&self) -> usize {
        self.latents.len()
    }

    /// Mask of channel `c` at `frame`, one value per latent bin.
    pub fn mask(&self, frame: usize, channel: usize) -> &[f64] {
        let b = self.latents[frame].len();
        &self.masks[frame][channel * b..(channel + 1) * b]
    }

    pub fn latent(&self, frame: usize) -> &[f64] {
        &self.latents[frame]
    }
}

fn samples_fingerprint(x: &[f64]) -> u64 {
    let mut h: u64 = 0x84222325CBF29CE4;
    for v in x {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h ^ x.len() as u64
}

fn run_forward(params: &SeparatorParams, mix: &[f64]) -> Result<ForwardCache> {
    params.check_shapes()?;
    let (f, b, h, n) = (params.frame_len(), params.latent_dim(), params.hidden_dim(), params.num_channels);
    let frames = mix.len().div_ceil(f);
    let mut padded = mix.to_vec();
    padded.resize(frames * f, 0.0);

    let mut latents = Vec::with_capacity(frames);
    let mut hidden = Vec::with_capacity(frames);
    let mut masks = Vec::with_capacity(frames);
    let mut estimates = vec![vec![0.0; frames * f]; n];
    let mut channel_latent = vec![0.0; b];
    let mut out = vec![0.0; f];

    for (t, frame) in padded.chunks_exact(f).enumerate() {
        let mut z = vec![0.0; b];
        params.encoder.matvec(frame, &mut z);
        let mut a = vec![0.0; h];
        params.mask_w1.matvec(&z, &mut a);
        for (av, bias) in a.iter_mut().zip(&params.mask_b1) {
            *av = (*av + bias).tanh();
        }
        let mut m = vec![0.0; n * b];
        params.mask_w2.matvec(&a, &mut m);
        for (mv, bias) in m.iter_mut().zip(&params.mask_b2) {
            *mv += bias;
        }
        // softmax over channels, independently per latent bin
        for k in 0..b {
            let peak = (0..n).map(|c| m[c * b + k]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for c in 0..n {
                let e = (m[c * b + k] - peak).exp();
                m[c * b + k] = e;
                total += e;
            }
            for c in 0..n {
                m[c * b + k] /= total;
            }
        }
        for (c, est) in estimates.iter_mut().enumerate() {
            for k in 0..b {
                channel_latent[k] = m[c * b + k] * z[k];
            }
            params.decoder.matvec(&channel_latent, &mut out);
            est[t * f..(t + 1) * f].copy_from_slice(&out);
        }
        latents.push(z);
        hidden.push(a);
        masks.push(m);
    }
    for est in &mut estimates {
        est.truncate(mix.len());
        if est.iter().any(|x| !x.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite separator output".into()));
        }
    }
    Ok(ForwardCache {
        params_fingerprint: params.fingerprint(),
        input_fingerprint: samples_fingerprint(mix),
        padded,
        input_len: mix.len(),
        latents,
        hidden,
        masks,
        estimates,
        loss_terms: None,
    })
}

/// Separates `mix` into one estimate per output channel.
pub fn forward(params: &SeparatorParams, mix: &Waveform) -> Result<(Vec<Waveform>, ForwardCache)> {
    let cache = run_forward(params, mix.samples())?;
    let estimates = estimate_waveforms(&cache, mix.sample_rate())?;
    Ok((estimates, cache))
}

pub fn estimate_waveforms(cache: &ForwardCache, sample_rate: u32) -> Result<Vec<Waveform>> {
    cache.estimates.iter().map(|e| Waveform::new(e.clone(), sample_rate)).collect()
}

pub(crate) fn forward_cache(params: &SeparatorParams, mix: &Waveform) -> Result<ForwardCache> {
    run_forward(params, mix.samples())
}

/// Negative mean SDR of the cached estimates, channel `c` scored against
/// source `perm[c]`. Stores the terms for a following [`backward`].
pub fn loss_from_cache(cache: &mut ForwardCache, mixture: &Mixture, perm: &[usize]) -> Result<f64> {
    let n = cache.estimates.len();
    if mixture.num_sources() != n {
        return Err(Error::ShapeMismatch(format!("{n} channels for {} sources", mixture.num_sources())));
    }
    check_permutation(perm, n)?;
    if samples_fingerprint(mixture.mix.samples()) != cache.input_fingerprint {
        return Err(Error::StaleCache);
    }
    let terms = cache
        .estimates
        .iter()
        .zip(perm)
        .map(|(est, &j)| sdr_terms(mixture.sources[j].samples(), est))
        .collect::<Result<Vec<_>>>()?;
    let value = -terms.iter().map(|t| t.db).sum::<f64>() / n as f64;
    cache.loss_terms = Some((perm.to_vec(), terms));
    Ok(value)
}

pub fn loss(params: &SeparatorParams, mixture: &Mixture, perm: &[usize]) -> Result<(f64, ForwardCache)> {
    let mut cache = run_forward(params, mixture.mix.samples())?;
    let value = loss_from_cache(&mut cache, mixture, perm)?;
    Ok((value, cache))
}

/// Exact gradient of the [`loss`] value with respect to every parameter.
pub fn backward(
    params: &SeparatorParams,
    mixture: &Mixture,
    perm: &[usize],
    cache: &ForwardCache,
) -> Result<Gradients> {
    let (perm_used, terms) = cache.loss_terms.as_ref().ok_or(Error::StaleCache)?;
    if perm_used != perm
        || cache.params_fingerprint != params.fingerprint()
        || cache.input_fingerprint != samples_fingerprint(mixture.mix.samples())
    {
        return Err(Error::StaleCache);
    }
    let (f, b, h, n) = (params.frame_len(), params.latent_dim(), params.hidden_dim(), params.num_channels);
    let frames = cache.num_frames();

    // dL/d estimate, zero-padded to whole frames
    let mut d_est = vec![vec![0.0; frames * f]; n];
    for (c, (&j, t)) in perm.iter().zip(terms).enumerate() {
        let len = cache.input_len;
        t.grad_estimate(
            mixture.sources[j].samples(),
            &cache.estimates[c],
            -1.0 / n as f64,
            &mut d_est[c][..len],
        );
    }

    let mut g = params.zeros_like();
    let mut channel_latent = vec![0.0; b];
    let mut d_channel = vec![0.0; b];
    let mut d_mask = vec![0.0; n * b];
    let mut d_latent = vec![0.0; b];
    let mut d_hidden = vec![0.0; h];

    for t in 0..frames {
        let z = &cache.latents[t];
        let hid = &cache.hidden[t];
        let m = &cache.masks[t];
        d_latent.fill(0.0);
        for c in 0..n {
            let dy = &d_est[c][t * f..(t + 1) * f];
            if dy.iter().all(|&v| v == 0.0) {
                d_mask[c * b..(c + 1) * b].fill(0.0);
                continue;
            }
            for k in 0..b {
                channel_latent[k] = m[c * b + k] * z[k];
            }
            g.decoder.outer_acc(dy, &channel_latent);
            d_channel.fill(0.0);
            params.decoder.matvec_t_acc(dy, &mut d_channel);
            for k in 0..b {
                d_mask[c * b + k] = d_channel[k] * z[k];
                d_latent[k] += d_channel[k] * m[c * b + k];
            }
        }
        // softmax backward across channels per bin, in place: d_mask -> d_logits
        for k in 0..b {
            let dot: f64 = (0..n).map(|c| m[c * b + k] * d_mask[c * b + k]).sum();
            for c in 0..n {
                d_mask[c * b + k] = m[c * b + k] * (d_mask[c * b + k] - dot);
            }
        }
        g.mask_w2.outer_acc(&d_mask, hid);
        for (gb, d) in g.mask_b2.iter_mut().zip(&d_mask) {
            *gb += d;
        }
        d_hidden.fill(0.0);
        params.mask_w2.matvec_t_acc(&d_mask, &mut d_hidden);
        for (dh, a) in d_hidden.iter_mut().zip(hid) {
            *dh *= 1.0 - a * a;
        }
        g.mask_w1.outer_acc(&d_hidden, z);
        for (gb, d) in g.mask_b1.iter_mut().zip(&d_hidden) {
            *gb += d;
        }
        params.mask_w1.matvec_t_acc(&d_hidden, &mut d_latent);
        g.encoder.outer_acc(&d_latent, &cache.padded[t * f..(t + 1) * f]);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separator::{init_params, SeparatorConfig};
    use crate::signal::{synthesize_dataset, SynthConfig};

    fn setup(seed: u64) -> (SeparatorParams, Mixture) {
        let cfg = SeparatorConfig { frame_len: 8, latent_dim: 6, hidden_dim: 5, seed, ..Default::default() };
        let p = init_params(&cfg).unwrap();
        let d = synthesize_dataset(&SynthConfig {
            num_mixtures: 1,
            samples_per_utt: 60,
            seed,
            ..Default::default()
        })
        .unwrap();
        (p, d.mixtures[0].clone())
    }

    #[test]
    fn shapes_and_mask_partition() {
        let (p, m) = setup(1);
        let (est, cache) = forward(&p, &m.mix).unwrap();
        assert_eq!(est.len(), 2);
        assert!(est.iter().all(|e| e.len() == 60));
        assert_eq!(cache.padding(), 4);
        for t in 0..cache.num_frames() {
            for k in 0..6 {
                let s: f64 = (0..2).map(|c| cache.mask(t, c)[k]).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_outputs_sum_to_decoded_latent() {
        let (p, m) = setup(2);
        let (est, cache) = forward(&p, &m.mix).unwrap();
        let f = p.frame_len();
        let mut out = vec![0.0; f];
        for t in 0..cache.num_frames() - 1 {
            p.decoder.matvec(cache.latent(t), &mut out);
            for (i, o) in out.iter().enumerate() {
                let sum = est[0].samples()[t * f + i] + est[1].samples()[t * f + i];
                assert!((sum - o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let (p, m) = setup(3);
        let (_, cache) = loss(&p, &m, &[0, 1]).unwrap();
        assert!(matches!(backward(&p, &m, &[1, 0], &cache), Err(Error::StaleCache)));
        let mut q = p.clone();
        q.decoder.data[0] += 1.0;
        assert!(matches!(backward(&q, &m, &[0, 1], &cache), Err(Error::StaleCache)));
        let (_, fresh) = forward(&p, &m.mix).unwrap();
        assert!(matches!(backward(&p, &m, &[0, 1], &fresh), Err(Error::StaleCache)));
        assert!(backward(&p, &m, &[0, 1], &cache).is_ok());
    }

    #[test]
    fn loss_relabeling_symmetry() {
        let (p, m) = setup(4);
        let a = loss(&p, &m, &[0, 1]).unwrap().0;
        let b = loss(&p, &m.reordered(&[1, 0]), &[1, 0]).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn masked_bin_gives_zero_decoder_gradient() {
        let (mut p, m) = setup(5);
        // latent bin 0 is zero on every frame, so decoder column 0 never sees input
        let f = p.frame_len();
        p.encoder.data[..f].fill(0.0);
        let (_, cache) = loss(&p, &m, &[0, 1]).unwrap();
        let g = backward(&p, &m, &[0, 1], &cache).unwrap();
        for r in 0..p.frame_len() {
            assert_eq!(g.decoder.at(r, 0), 0.0);
        }
        assert!(g.is_finite());
    }
}
