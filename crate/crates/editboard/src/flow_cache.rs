//! Binary flow files and a disk-caching flow estimator.
//!
//! Layout: 8-byte magic `EBFLOW01`, u32 LE width, u32 LE height, then the
//! `u` plane followed by the `v` plane as row-major little-endian f32.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use editboard_core::flow::FlowError;
use editboard_core::{BackendDescriptor, FlowEstimator, FlowField, RgbImage};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"EBFLOW01";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FlowFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("not a flow file (bad magic)")]
    BadMagic,
    #[error("truncated flow file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub fn encode_flow(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * flow.u().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(flow.width() as u32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as u32).to_le_bytes());
    for plane in [flow.u(), flow.v()] {
        for x in plane {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_flow(bytes: &[u8]) -> Result<FlowField, FlowFileError> {
    if bytes.len() < HEADER_LEN {
        return Err(FlowFileError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(FlowFileError::BadMagic);
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let n = w * h;
    let expected = HEADER_LEN + 8 * n;
    if bytes.len() != expected {
        return Err(FlowFileError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let plane = |offset: usize| -> Vec<f32> {
        bytes[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    Ok(FlowField::new(w, h, plane(HEADER_LEN), plane(HEADER_LEN + 4 * n))?)
}

pub fn read_flow(path: &Path) -> Result<FlowField, FlowFileError> {
    decode_flow(&fs::read(path)?)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_flow(path: &Path, flow: &FlowField) -> Result<(), FlowFileError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&encode_flow(flow))?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Wraps an estimator and stores every computed field under `dir`, keyed
/// by the backend id and the bytes of both frames.
pub struct CachedFlow<E> {
    inner: E,
    dir: PathBuf,
}

impl<E: FlowEstimator> CachedFlow<E> {
    pub fn new(inner: E, dir: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            dir: dir.into(),
        }
    }

    pub fn path_for(&self, a: &RgbImage, b: &RgbImage) -> PathBuf {
        let mut h = Sha256::new();
        h.update(self.inner.descriptor().id().as_bytes());
        for img in [a, b] {
            h.update((img.width() as u64).to_le_bytes());
            h.update((img.height() as u64).to_le_bytes());
            h.update(img.as_raw());
        }
        let digest: [u8; 32] = h.finalize().into();
        let name: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{name}.flow"))
    }
}

impl<E: FlowEstimator> FlowEstimator for CachedFlow<E> {
    fn descriptor(&self) -> BackendDescriptor {
        self.inner.descriptor()
    }

    fn estimate_flow(&self, a: &RgbImage, b: &RgbImage) -> Result<FlowField, FlowError> {
        let path = self.path_for(a, b);
        if let Ok(f) = read_flow(&path) {
            if f.width() == a.width() && f.height() == a.height() {
                return Ok(f);
            }
        }
        let f = self.inner.estimate_flow(a, b)?;
        if let Err(e) = write_flow(&path, &f) {
            log::warn!("flow cache write failed for {}: {e}", path.display());
        }
        Ok(f)
    }
}
