//! Parameter checkpoints: `b"PITM"`, version `u32`, the config echo
//! (`frame_len`, `latent_dim`, `hidden_dim`, `num_channels` as `u32`,
//! `init_scale` as `f32`, `seed` as `u64`), then every tensor in declaration
//! order as `f32`. Little-endian throughout.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{SeparatorConfig, SeparatorParams};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PITM";
const VERSION: u32 = 1;

pub fn encode_checkpoint(params: &SeparatorParams, config: &SeparatorConfig) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + 4 * params.num_params());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    let dims = [params.frame_len(), params.latent_dim(), params.hidden_dim(), params.num_channels];
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(config.init_scale as f32).to_le_bytes());
    out.extend_from_slice(&config.seed.to_le_bytes());
    for t in params.tensors() {
        for &x in t {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(buf: &[u8]) -> Result<(SeparatorParams, SeparatorConfig)> {
    let bad = |d: &str| Error::format("checkpoint", d);
    let word = |i: usize| -> Result<[u8; 4]> {
        buf.get(i..i + 4).map(|s| s.try_into().expect("4 bytes")).ok_or_else(|| bad("truncated"))
    };
    if &word(0)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    if u32::from_le_bytes(word(4)?) != VERSION {
        return Err(bad("unsupported version"));
    }
    let dim = |i: usize| word(8 + 4 * i).map(|w| u32::from_le_bytes(w) as usize);
    let init_scale = f64::from(f32::from_le_bytes(word(24)?));
    let seed_bytes = buf.get(28..36).ok_or_else(|| bad("truncated"))?;
    let config = SeparatorConfig {
        frame_len: dim(0)?,
        latent_dim: dim(1)?,
        hidden_dim: dim(2)?,
        num_channels: dim(3)?,
        init_scale,
        seed: u64::from_le_bytes(seed_bytes.try_into().expect("8 bytes")),
    };
    config.validate()?;
    let mut params = SeparatorParams::zeros(&config);
    let expected = 36 + 4 * params.num_params();
    if buf.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", buf.len())));
    }
    let mut pos = 36;
    for t in params.tensors_mut() {
        for x in t.iter_mut() {
            *x = f64::from(f32::from_le_bytes(word(pos)?));
            pos += 4;
        }
    }
    Ok((params, config))
}

pub fn write_checkpoint(path: &Path, params: &SeparatorParams, config: &SeparatorConfig) -> Result<()> {
    fs::write(path, encode_checkpoint(params, config)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(SeparatorParams, SeparatorConfig)> {
    decode_checkpoint(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
