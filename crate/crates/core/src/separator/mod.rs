//! Miniature mask-inference separator: linear frame encoder, a one-hidden-layer
//! mask network with a softmax across output channels, and a linear decoder.

mod adam;
mod checkpoint;
mod model;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub(crate) use model::forward_cache;
pub use model::{backward, estimate_waveforms, forward, loss, loss_from_cache, ForwardCache};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparatorConfig {
    pub frame_len: usize,
    pub latent_dim: usize,
    pub hidden_dim: usize,
    pub num_channels: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for SeparatorConfig {
    fn default() -> Self {
        Self { frame_len: 16, latent_dim: 16, hidden_dim: 32, num_channels: 2, init_scale: 0.25, seed: 0 }
    }
}

impl SeparatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 4 || self.latent_dim < 2 || self.hidden_dim < 1 || self.num_channels < 2 {
            return Err(Error::InvalidConfig(format!(
                "separator needs frame_len >= 4, latent_dim >= 2, hidden_dim >= 1, num_channels >= 2 (got {}, {}, {}, {})",
                self.frame_len, self.latent_dim, self.hidden_dim, self.num_channels
            )));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidConfig("init_scale must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out = self · x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out += selfᵀ · y`
    pub fn matvec_t_acc(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        for (&yr, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            if yr != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * yr;
                }
            }
        }
    }

    /// `self += y · xᵀ`
    pub fn outer_acc(&mut self, y: &[f64], x: &[f64]) {
        for (&yr, row) in y.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            if yr != 0.0 {
                for (a, xv) in row.iter_mut().zip(x) {
                    *a += yr * xv;
                }
            }
        }
    }
}

/// Separator weights. Gradients and optimizer moments share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorParams {
    pub encoder: Matrix,
    pub mask_w1: Matrix,
    pub mask_b1: Vec<f64>,
    pub mask_w2: Matrix,
    pub mask_b2: Vec<f64>,
    pub decoder: Matrix,
    pub num_channels: usize,
}

pub type Gradients = SeparatorParams;

impl SeparatorParams {
    pub fn zeros(config: &SeparatorConfig) -> Self {
        let (f, b, h, n) = (config.frame_len, config.latent_dim, config.hidden_dim, config.num_channels);
        Self {
            encoder: Matrix::zeros(b, f),
            mask_w1: Matrix::zeros(h, b),
            mask_b1: vec![0.0; h],
            mask_w2: Matrix::zeros(n * b, h),
            mask_b2: vec![0.0; n * b],
            decoder: Matrix::zeros(f, b),
            num_channels: n,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    pub fn frame_len(&self) -> usize {
        self.encoder.cols
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.rows
    }

    pub fn hidden_dim(&self) -> usize {
        self.mask_w1.rows
    }

    pub fn config(&self, init_scale: f64, seed: u64) -> SeparatorConfig {
        SeparatorConfig {
            frame_len: self.frame_len(),
            latent_dim: self.latent_dim(),
            hidden_dim: self.hidden_dim(),
            num_channels: self.num_channels,
            init_scale,
            seed,
        }
    }

    /// Parameter tensors in declaration order.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            &self.encoder.data,
            &self.mask_w1.data,
            &self.mask_b1,
            &self.mask_w2.data,
            &self.mask_b2,
            &self.decoder.data,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.encoder.data,
            &mut self.mask_w1.data,
            &mut self.mask_b1,
            &mut self.mask_w2.data,
            &mut self.mask_b2,
            &mut self.decoder.data,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.num_channels == other.num_channels
            && self.tensors().iter().zip(other.tensors()).all(|(a, b)| a.len() == b.len())
            && self.encoder.rows == other.encoder.rows
            && self.mask_w1.rows == other.mask_w1.rows
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let (b, f, h, n) = (self.latent_dim(), self.frame_len(), self.hidden_dim(), self.num_channels);
        let ok = self.mask_w1.cols == b
            && self.mask_b1.len() == h
            && self.mask_w2.rows == n * b
            && self.mask_w2.cols == h
            && self.mask_b2.len() == n * b
            && self.decoder.rows == f
            && self.decoder.cols == b;
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("inconsistent separator parameter shapes".into()))
        }
    }

    /// Order-sensitive hash of every parameter bit pattern.
    pub(crate) fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for t in self.tensors() {
            for x in t {
                h ^= x.to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        h
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

/// Uniform `(-init_scale, init_scale)` weights from the config's seed.
pub fn init_params(config: &SeparatorConfig) -> Result<SeparatorParams> {
    config.validate()?;
    let mut p = SeparatorParams::zeros(config);
    if config.init_scale == 0.0 {
        return Ok(p);
    }
    let mut rng = seed::rng(seed::derive(config.seed, "init", 0));
    let s = config.init_scale;
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|x| *x = rng.gen_range(-s..s));
    }
    Ok(p)
}
