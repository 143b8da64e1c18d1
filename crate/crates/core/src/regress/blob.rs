//! Versioned binary model blobs: magic, version, JSON metadata, raw `f64` parameters.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RSMODEL\0";
pub const BLOB_VERSION: u32 = 1;

pub fn encode_blob<T: Serialize>(meta: &T, params: &[f64]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(meta)?;
    let mut out = Vec::with_capacity(24 + json.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_blob<T: DeserializeOwned>(bytes: &[u8]) -> Result<(T, Vec<f64>)> {
    let bad = |what: &str| Error::Data(format!("model blob: {what}"));
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != BLOB_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let jl = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let rest = &bytes[20..];
    if rest.len() < jl + 8 {
        return Err(bad("truncated metadata"));
    }
    let meta: T = serde_json::from_slice(&rest[..jl])?;
    let np = u64::from_le_bytes(rest[jl..jl + 8].try_into().expect("8 bytes")) as usize;
    let data = &rest[jl + 8..];
    if data.len() != 8 * np {
        return Err(bad("parameter length mismatch"));
    }
    let params = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((meta, params))
}
