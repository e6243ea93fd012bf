//! Binary dataset files.
//!
//! Layout, all little-endian: `b"PITD"`, version `u32`, then `T`, `N`,
//! `samples_per_utt` as `u32`; then per mixture the `N` speaker ids (`u32`),
//! the mix samples and the `N` source sample blocks (`f32`).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{Dataset, Mixture, Split, Waveform};

pub const DATASET_MAGIC: &[u8; 4] = b"PITD";
pub const DATASET_VERSION: u32 = 1;

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let n = d.num_sources();
    let len = d.samples_per_utt();
    let mut out = Vec::with_capacity(20 + d.len() * (4 * n + 4 * len * (n + 1)));
    out.extend_from_slice(DATASET_MAGIC);
    for v in [DATASET_VERSION, d.len() as u32, n as u32, len as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for m in &d.mixtures {
        for id in &m.speaker_ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
        for w in std::iter::once(&m.mix).chain(&m.sources) {
            for &x in w.samples() {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take4(&mut self) -> Result<[u8; 4]> {
        let bytes = self
            .buf
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| Error::format("dataset file", format!("truncated at byte {}", self.pos)))?;
        self.pos += 4;
        Ok(bytes.try_into().expect("4-byte slice"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.take4().map(u32::from_le_bytes)
    }

    fn f32(&mut self) -> Result<f32> {
        self.take4().map(f32::from_le_bytes)
    }
}

pub fn decode_dataset(buf: &[u8], split: Split) -> Result<Dataset> {
    let mut r = Reader { buf, pos: 0 };
    if &r.take4()? != DATASET_MAGIC {
        return Err(Error::format("dataset file", "bad magic"));
    }
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::format("dataset file", format!("unsupported version {version}")));
    }
    let (t, n, len) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let mut mixtures = Vec::with_capacity(t);
    for id in 0..t {
        let speaker_ids = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let mut block = || -> Result<Waveform> {
            let s = (0..len).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
            Waveform::from_samples(s)
        };
        let mix = block()?;
        let sources = (0..n).map(|_| block()).collect::<Result<Vec<_>>>()?;
        mixtures.push(Mixture { id, mix, sources, speaker_ids });
    }
    if r.pos != buf.len() {
        return Err(Error::format("dataset file", "trailing bytes"));
    }
    Dataset::new(mixtures, split)
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<()> {
    fs::write(path, encode_dataset(d)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path, split: Split) -> Result<Dataset> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&buf, split)
}
