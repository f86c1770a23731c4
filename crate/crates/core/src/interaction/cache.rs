//! On-disk tensor cache: a versioned header followed by raw little-endian
//! doubles. Files whose key does not match are rebuilt.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::tensor::TwoBodyTensor;
use crate::basis::RadialGrid;
use crate::error::Result;

const MAGIC: &[u8; 8] = b"HFBTENSR";
const VERSION: u32 = 1;

pub type CacheKey = [u8; 32];

/// Hash of the kernel description, the grid nodes and `l_max`.
pub fn cache_key(kernel: &str, grid: &RadialGrid, l_max: usize) -> CacheKey {
    let mut h = Sha256::new();
    h.update(VERSION.to_le_bytes());
    h.update(kernel.as_bytes());
    h.update([grid.origin() as u8]);
    h.update((grid.nodes().len() as u64).to_le_bytes());
    for x in grid.nodes() {
        h.update(x.to_le_bytes());
    }
    h.update((l_max as u64).to_le_bytes());
    h.finalize().into()
}

pub fn cache_path(dir: &Path, key: &CacheKey) -> PathBuf {
    let hex: String = key[..12].iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("tensor-{hex}.bin"))
}

pub fn store(path: &Path, key: &CacheKey, t: &TwoBodyTensor) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + 8 * t.stored_len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(key);
    buf.extend_from_slice(&(t.n_basis() as u64).to_le_bytes());
    buf.extend_from_slice(&(t.l_max() as u64).to_le_bytes());
    for b in t.blocks() {
        for x in b.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Reads a cached tensor; `None` when the file is missing, truncated, of
/// another version, or keyed differently.
pub fn load(path: &Path, key: &CacheKey) -> Option<TwoBodyTensor> {
    let mut bytes = Vec::new();
    fs::File::open(path).ok()?.read_to_end(&mut bytes).ok()?;
    let mut cur = bytes.as_slice();
    let mut take = |n: usize| -> Option<&[u8]> {
        if cur.len() < n {
            return None;
        }
        let (head, rest) = cur.split_at(n);
        cur = rest;
        Some(head)
    };
    if take(8)? != MAGIC {
        return None;
    }
    if u32::from_le_bytes(take(4)?.try_into().ok()?) != VERSION {
        return None;
    }
    if take(32)? != key {
        return None;
    }
    let n_basis = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
    let l_max = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
    if n_basis == 0 || l_max > 16 {
        return None;
    }
    let np = 2 * n_basis - 1;
    let mut blocks = Vec::new();
    for _ in 0..(l_max + 1) * (l_max + 2) / 2 {
        let raw = take(8 * np * np)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        blocks.push(DMatrix::from_iterator(np, np, data));
    }
    if !cur.is_empty() {
        return None;
    }
    TwoBodyTensor::from_blocks(n_basis, l_max, blocks).ok()
}

/// Returns the cached tensor for `key` or builds and stores it.
pub fn load_or_build(
    dir: &Path,
    key: &CacheKey,
    build: impl FnOnce() -> Result<TwoBodyTensor>,
) -> Result<TwoBodyTensor> {
    let path = cache_path(dir, key);
    if let Some(t) = load(&path, key) {
        return Ok(t);
    }
    let t = build()?;
    store(&path, key, &t)?;
    Ok(t)
}
