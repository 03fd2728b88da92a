//! Versioned binary weight checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes   "BCNNCKPT"
//! version      u32       1
//! config_len   u32
//! config       config_len bytes of UTF-8 JSON (ModelConfig)
//! seed         u64
//! n_blocks     u32
//! per block:
//!   name_len   u32, name bytes (UTF-8)
//!   rank       u32, rank × u64 extents
//!   values     product(extents) × f64 (IEEE-754 bits, LE)
//! ```
//!
//! Blocks appear in parameter registration order. Optimizer moments are not
//! stored, so a reloaded model resumes with fresh Adam state.

use std::fs;
use std::path::Path;

use super::config::ModelConfig;
use super::state::ModelState;
use crate::error::{Error, Result};
use crate::numerics::{HasParameters, Tensor};

const MAGIC: &[u8; 8] = b"BCNNCKPT";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_checkpoint(state: &ModelState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let config = serde_json::to_vec(&state.config).expect("config serializes");
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&state.seed.to_le_bytes());
    let params = state.parameters();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.value.rank() as u32).to_le_bytes());
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Config(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelState> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Config("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Config(format!("unsupported checkpoint version {version}")));
    }
    let len = r.u32()? as usize;
    let config: ModelConfig =
        serde_json::from_slice(r.take(len)?).map_err(|e| Error::Config(format!("checkpoint config: {e}")))?;
    let seed = r.u64()?;
    let mut state = ModelState::init(&config, seed, None)?;
    let n_blocks = r.u32()? as usize;
    let mut params = state.parameters_mut();
    if n_blocks != params.len() {
        return Err(Error::Config(format!(
            "checkpoint has {n_blocks} blocks, config implies {}",
            params.len()
        )));
    }
    for p in params.iter_mut() {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Config("checkpoint block name is not UTF-8".into()))?;
        if name != p.name {
            return Err(Error::Config(format!("expected block {}, found {name}", p.name)));
        }
        let rank = r.u32()? as usize;
        let shape = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        if shape != p.value.shape() {
            return Err(Error::Config(format!(
                "block {name} has shape {shape:?}, config implies {:?}",
                p.value.shape()
            )));
        }
        let raw = r.take(p.value.len() * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        p.value = Tensor::new(shape, values)?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Config("trailing bytes after checkpoint".into()));
    }
    Ok(state)
}

pub fn save_checkpoint(state: &ModelState, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(state)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
