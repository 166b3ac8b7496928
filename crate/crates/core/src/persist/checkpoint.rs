//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "WDSELCKP"
//! version      u32
//! arch hash    u64
//! bank size    u32
//! meta length  u32, then that many bytes of JSON (CheckpointMeta)
//! tensors      u32 count, then per tensor:
//!                u32 name length, name bytes, u32 rank, rank x u64 dims,
//!                prod(dims) x f64
//! checksum     u64, leading bytes of SHA-256 over everything above
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::{ArchConfig, Model};
use crate::wavelet::DenoiseConfig;

pub const MAGIC: &[u8; 8] = b"WDSELCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Inference settings saved next to the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub arch: ArchConfig,
    pub denoise: DenoiseConfig,
    pub epsilon_truncation: f64,
    pub window_len: usize,
    pub crm_enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub meta: CheckpointMeta,
}

fn checksum(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn encode_checkpoint(model: &Model, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    if meta.arch != *model.arch() {
        return Err(Error::ArchitectureMismatch("checkpoint metadata describes a different architecture".into()));
    }
    let mut b = Vec::new();
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    b.extend_from_slice(&model.architecture_hash().to_le_bytes());
    b.extend_from_slice(&(model.categories() as u32).to_le_bytes());
    let meta = serde_json::to_vec(meta).map_err(|e| Error::Structural(format!("checkpoint metadata: {e}")))?;
    b.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    b.extend_from_slice(&meta);
    b.extend_from_slice(&(model.params().len() as u32).to_le_bytes());
    for (name, t) in model.names().iter().zip(model.params()) {
        b.extend_from_slice(&(name.len() as u32).to_le_bytes());
        b.extend_from_slice(name.as_bytes());
        b.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            b.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.values() {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = checksum(&b);
    b.extend_from_slice(&sum.to_le_bytes());
    Ok(b)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::CorruptCheckpoint("file ends inside a record".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::CorruptCheckpoint("not a checkpoint (bad magic bytes)".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: CHECKPOINT_VERSION });
    }
    if bytes.len() < c.pos + 8 {
        return Err(Error::CorruptCheckpoint("file is truncated".into()));
    }
    let body = &bytes[..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("8 bytes"));
    if checksum(body) != stored {
        return Err(Error::CorruptCheckpoint("checksum mismatch (truncated or modified file)".into()));
    }
    let mut c = Cursor { bytes: body, pos: c.pos };
    let hash = c.u64()?;
    let bank = c.u32()? as usize;
    let meta_len = c.u32()? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(c.take(meta_len)?)
        .map_err(|e| Error::CorruptCheckpoint(format!("metadata: {e}")))?;
    if meta.arch.hash(bank) != hash {
        return Err(Error::ArchitectureMismatch(format!(
            "stored hash {hash:016x} does not match the recorded architecture ({:016x})",
            meta.arch.hash(bank)
        )));
    }
    let count = c.u32()? as usize;
    let mut parts = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::CorruptCheckpoint("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = c.u32()? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(c.u64()? as usize);
        }
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let n = n.filter(|n| n.checked_mul(8).is_some_and(|b| b <= body.len()));
        let n = n.ok_or_else(|| Error::CorruptCheckpoint(format!("tensor {name} has an impossible shape")))?;
        let values = c.take(n * 8)?.chunks_exact(8).map(|ch| f64::from_le_bytes(ch.try_into().expect("8 bytes"))).collect();
        parts.push((name, Tensor::new(shape, values)?));
    }
    if c.pos != body.len() {
        return Err(Error::CorruptCheckpoint("trailing bytes after the last tensor".into()));
    }
    let model = Model::from_parts(meta.arch, bank, parts)?;
    Ok(Checkpoint { model, meta })
}

pub fn save_checkpoint(path: &Path, model: &Model, meta: &CheckpointMeta) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, encode_checkpoint(model, meta)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    decode_checkpoint(&std::fs::read(path)?)
}

impl Checkpoint {
    /// Fails unless the checkpoint was built for `bank_size` categories and
    /// the given architecture.
    pub fn expect(&self, bank_size: usize, arch: &ArchConfig) -> Result<()> {
        if self.model.categories() != bank_size {
            return Err(Error::ArchitectureMismatch(format!(
                "checkpoint was trained for a bank of {}, this run uses {bank_size}",
                self.model.categories()
            )));
        }
        if self.model.architecture_hash() != arch.hash(bank_size) {
            return Err(Error::ArchitectureMismatch("checkpoint architecture differs from the configured model".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;

    fn setup() -> (Model, CheckpointMeta) {
        let arch = ArchConfig::default();
        let model = Model::init(arch, 16, 9).unwrap();
        let meta = CheckpointMeta { arch, denoise: DenoiseConfig::default(), epsilon_truncation: 0.05, window_len: 512, crm_enabled: true };
        (model, meta)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (model, meta) = setup();
        let back = decode_checkpoint(&encode_checkpoint(&model, &meta).unwrap()).unwrap();
        assert_eq!(back.model, model);
        assert_eq!(back.meta, meta);
        let x = Signal::new((0..6).map(|c| (0..512).map(|k| ((k * (c + 1)) as f64 * 0.01).sin()).collect()).collect(), 200.0).unwrap();
        let (a, b) = (model.decide(&x).unwrap(), back.model.decide(&x).unwrap());
        assert!(a.values().iter().zip(b.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn truncation_and_tampering_are_corrupt() {
        let (model, meta) = setup();
        let bytes = encode_checkpoint(&model, &meta).unwrap();
        for cut in [0, 4, 12, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::CorruptCheckpoint(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 1;
        assert!(matches!(decode_checkpoint(&flipped), Err(Error::CorruptCheckpoint(_))));
    }

    #[test]
    fn version_and_bank_mismatch() {
        let (model, meta) = setup();
        let mut bytes = encode_checkpoint(&model, &meta).unwrap();
        bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::VersionMismatch { found: 99, expected: 1 })));
        let ck = decode_checkpoint(&encode_checkpoint(&model, &meta).unwrap()).unwrap();
        assert!(ck.expect(16, &meta.arch).is_ok());
        assert!(matches!(ck.expect(5, &meta.arch), Err(Error::ArchitectureMismatch(_))));
        let other = ArchConfig { blocks: 2, ..meta.arch };
        assert!(matches!(ck.expect(16, &other), Err(Error::ArchitectureMismatch(_))));
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_checkpoint(&dir.path().join("m.bin")), Err(Error::MissingFile(_))));
    }
}
