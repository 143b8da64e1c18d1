//! On-disk path cache: one columnar binary file per configuration plus a JSON
//! sidecar carrying the metadata and a checksum.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::batch::{PathBatch, SimDiagnostics};
use super::params::{ModelParams, SimConfig};

const MAGIC: &[u8; 8] = b"RSPATHS1";
pub const CACHE_ENV: &str = "ROUGHSTOP_CACHE_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheMeta {
    pub key: String,
    pub params: ModelParams,
    pub sim: SimConfig,
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
    pub diagnostics: SimDiagnostics,
}

#[derive(Debug, Clone)]
pub struct PathCache {
    dir: PathBuf,
}

/// Outcome of a cache lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// An entry existed but failed verification and was regenerated.
    Regenerated,
}

/// Hash of the canonical JSON of `(params, sim)`.
pub fn config_key(params: &ModelParams, sim: &SimConfig) -> String {
    let canon = serde_json::json!({ "params": params, "sim": sim });
    let digest = Sha256::digest(canon.to_string().as_bytes());
    hex::encode(&digest[..16])
}

impl PathCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Directory from the environment, defaulting to `./.roughstop-cache`.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".roughstop-cache"));
        Self::new(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn data_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }

    fn meta_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn lock(&self) -> Result<LockGuard> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(".lock");
        let start = Instant::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(LockGuard { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if start.elapsed() > Duration::from_secs(600) {
                        return Err(Error::Cache(format!("timed out waiting for lock {}", path.display())));
                    }
                    std::thread::sleep(Duration::from_millis(50));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    pub fn store(&self, batch: &PathBatch) -> Result<CacheMeta> {
        let _guard = self.lock()?;
        self.store_unlocked(batch)
    }

    fn store_unlocked(&self, batch: &PathBatch) -> Result<CacheMeta> {
        let key = config_key(&batch.params, &batch.sim);
        let bytes = encode(batch);
        let meta = CacheMeta {
            key: key.clone(),
            params: batch.params.clone(),
            sim: batch.sim.clone(),
            rows: batch.num_paths(),
            cols: batch.times.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            diagnostics: batch.diagnostics.clone(),
        };
        let tmp = self.dir.join(format!("{key}.bin.tmp"));
        File::create(&tmp)?.write_all(&bytes)?;
        fs::rename(&tmp, self.data_path(&key))?;
        fs::write(self.meta_path(&key), serde_json::to_string_pretty(&meta)?)?;
        Ok(meta)
    }

    /// Load a cached batch, or `None` when absent.
    pub fn load(&self, params: &ModelParams, sim: &SimConfig) -> Result<Option<PathBatch>> {
        let key = config_key(params, sim);
        let (dp, mp) = (self.data_path(&key), self.meta_path(&key));
        if !dp.exists() || !mp.exists() {
            return Ok(None);
        }
        let meta: CacheMeta = serde_json::from_str(&fs::read_to_string(mp)?)?;
        let mut bytes = Vec::new();
        File::open(dp)?.read_to_end(&mut bytes)?;
        if hex::encode(Sha256::digest(&bytes)) != meta.sha256 {
            return Err(Error::Cache(format!("checksum mismatch for entry {key}")));
        }
        if &meta.params != params || &meta.sim != sim {
            return Err(Error::Cache(format!("metadata mismatch for entry {key}")));
        }
        decode(&bytes, meta).map(Some)
    }

    /// Load or simulate-and-store. Corrupt entries are regenerated.
    pub fn get_or_simulate(
        &self,
        params: &ModelParams,
        sim: &SimConfig,
        refresh: bool,
        simulate: impl FnOnce() -> Result<PathBatch>,
    ) -> Result<(PathBatch, CacheStatus)> {
        let _guard = self.lock()?;
        let mut status = CacheStatus::Miss;
        if !refresh {
            match self.load(params, sim) {
                Ok(Some(b)) => return Ok((b, CacheStatus::Hit)),
                Ok(None) => {}
                Err(Error::Cache(_)) | Err(Error::Json(_)) | Err(Error::Data(_)) => status = CacheStatus::Regenerated,
                Err(e) => return Err(e),
            }
        }
        let batch = simulate()?;
        self.store_unlocked(&batch)?;
        Ok((batch, status))
    }

    pub fn list(&self) -> Result<Vec<CacheMeta>> {
        if !self.dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            if p.extension().and_then(|e| e.to_str()) == Some("json") {
                if let Ok(meta) = serde_json::from_str::<CacheMeta>(&fs::read_to_string(&p)?) {
                    out.push(meta);
                }
            }
        }
        out.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(out)
    }

    /// Remove every entry; returns how many were removed.
    pub fn clear(&self) -> Result<usize> {
        if !self.dir.exists() {
            return Ok(0);
        }
        let _guard = self.lock()?;
        let mut n = 0;
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            match p.extension().and_then(|e| e.to_str()) {
                Some("bin") => {
                    fs::remove_file(&p)?;
                    n += 1;
                }
                Some("json") | Some("tmp") => fs::remove_file(&p)?,
                _ => {}
            }
        }
        Ok(n)
    }
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn encode(batch: &PathBatch) -> Vec<u8> {
    let (m, c) = batch.s.dim();
    let mut out = Vec::with_capacity(24 + 8 * (5 * m * c + c));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&(c as u64).to_le_bytes());
    for t in &batch.times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for arr in [&batch.s, &batch.x, &batch.v, &batch.w, &batch.b] {
        for v in arr.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode(bytes: &[u8], meta: CacheMeta) -> Result<PathBatch> {
    let bad = || Error::Data("malformed path cache entry".into());
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(bad());
    }
    let m = u64::from_le_bytes(bytes[8..16].try_into().map_err(|_| bad())?) as usize;
    let c = u64::from_le_bytes(bytes[16..24].try_into().map_err(|_| bad())?) as usize;
    if m != meta.rows || c != meta.cols || bytes.len() != 24 + 8 * (c + 5 * m * c) {
        return Err(bad());
    }
    let mut vals = bytes[24..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")));
    let times: Vec<f64> = vals.by_ref().take(c).collect();
    let mut next = || Array2::from_shape_vec((m, c), vals.by_ref().take(m * c).collect()).map_err(|_| bad());
    let (s, x, v, w, b) = (next()?, next()?, next()?, next()?, next()?);
    Ok(PathBatch {
        exercise_idx: meta.sim.exercise_indices(),
        params: meta.params,
        sim: meta.sim,
        times,
        s,
        x,
        v,
        w,
        b,
        diagnostics: meta.diagnostics,
    })
}
