//! Binary parameter checkpoints.
//!
//! Layout: an 8-byte little-endian header length, a UTF-8 JSON header
//! `{"format", "version", "config", "tensors": [{"name", "shape"}]}`, then
//! every tensor's values in header order as little-endian `f32`.
//! Values are rounded to `f32` on save, so a loaded checkpoint saves back to
//! identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{LamConfig, LamParams, Tensor};
use crate::error::{Error, Result};

const FORMAT: &str = "polytrack-lam";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: LamConfig,
    tensors: Vec<TensorHeader>,
}

#[derive(Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

/// Serializes parameters to checkpoint bytes.
pub fn checkpoint_to_bytes(params: &LamParams) -> Vec<u8> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        config: params.config().clone(),
        tensors: params
            .tensors()
            .iter()
            .map(|t| TensorHeader {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + 4 * params.num_values());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in params.tensors() {
        for &v in &t.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Parses checkpoint bytes, validating the layout against the stored config.
pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<LamParams> {
    let ctx = "checkpoint";
    let len_bytes: [u8; 8] = bytes
        .get(..8)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::parse(ctx, "missing header length"))?;
    let len = usize::try_from(u64::from_le_bytes(len_bytes))
        .map_err(|_| Error::parse(ctx, "header length overflows"))?;
    let json = bytes
        .get(8..8usize.saturating_add(len))
        .ok_or_else(|| Error::parse(ctx, "truncated header"))?;
    let header: Header =
        serde_json::from_slice(json).map_err(|e| Error::parse(ctx, e.to_string()))?;
    if header.format != FORMAT {
        return Err(Error::Schema(format!("unknown checkpoint format {:?}", header.format)));
    }
    if header.version != VERSION {
        return Err(Error::Schema(format!("unsupported checkpoint version {}", header.version)));
    }
    let mut payload = &bytes[8 + len..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for th in header.tensors {
        let count: usize = th.shape.iter().product();
        let need = count * 4;
        if payload.len() < need {
            return Err(Error::parse(ctx, format!("truncated data for tensor {}", th.name)));
        }
        let data = payload[..need]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        payload = &payload[need..];
        tensors.push(Tensor {
            name: th.name,
            shape: th.shape,
            data,
        });
    }
    if !payload.is_empty() {
        return Err(Error::parse(ctx, format!("{} trailing bytes", payload.len())));
    }
    LamParams::from_tensors(header.config, tensors)
}

/// Writes a checkpoint atomically.
pub fn save_checkpoint(path: &Path, params: &LamParams) -> Result<()> {
    crate::io::write_atomic(path, &checkpoint_to_bytes(params))
}

pub fn load_checkpoint(path: &Path) -> Result<LamParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}
