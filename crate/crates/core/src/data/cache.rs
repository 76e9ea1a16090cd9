//! Preprocessed-dataset cache.
//!
//! One file per split portion. Layout, all little-endian:
//!
//! | bytes          | content                                   |
//! |----------------|-------------------------------------------|
//! | 0..4           | magic `"IDUD"`                            |
//! | 4..8            | version `u32` (currently 1)              |
//! | 8..12          | sample count `u32`                        |
//! | 12..16         | label offset `u32` (= 16 + count·400)     |
//! | 16..labels     | `count · 100` angles as `f32`             |
//! | labels..end    | `count` labels as bytes                   |
//!
//! Angles are stored in `f32`; loading widens back to `f64` and clamps to
//! `[0, π]` to absorb the one-ulp overshoot `f32::to_f64` can introduce at
//! the π endpoint.

use super::{DataError, ImageSample, IMAGE_PIXELS};
use std::io::Write;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"IDUD";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Encode samples in the cache layout.
pub fn encode(samples: &[ImageSample]) -> Vec<u8> {
    let count = samples.len();
    let label_offset = HEADER_LEN + count * IMAGE_PIXELS * 4;
    let mut out = Vec::with_capacity(label_offset + count);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(count as u32).to_le_bytes());
    out.extend_from_slice(&(label_offset as u32).to_le_bytes());
    for s in samples {
        for &a in &s.angles {
            out.extend_from_slice(&(a as f32).to_le_bytes());
        }
    }
    out.extend(samples.iter().map(|s| s.label));
    out
}

/// Decode a cache byte stream.
pub fn decode(bytes: &[u8]) -> Result<Vec<ImageSample>, DataError> {
    if bytes.len() < HEADER_LEN {
        return Err(DataError::CacheFormat(format!(
            "file shorter than {HEADER_LEN}-byte header"
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(DataError::CacheFormat("bad magic, expected IDUD".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(DataError::CacheFormat(format!(
            "unsupported version {version}"
        )));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let label_offset = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected_offset = HEADER_LEN + count * IMAGE_PIXELS * 4;
    if label_offset != expected_offset {
        return Err(DataError::CacheFormat(format!(
            "label offset {label_offset}, expected {expected_offset}"
        )));
    }
    if bytes.len() != label_offset + count {
        return Err(DataError::CacheFormat(format!(
            "file length {}, expected {}",
            bytes.len(),
            label_offset + count
        )));
    }
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let base = HEADER_LEN + i * IMAGE_PIXELS * 4;
        let mut angles = [0.0f64; IMAGE_PIXELS];
        for (k, slot) in angles.iter_mut().enumerate() {
            let at = base + 4 * k;
            let v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64;
            if !(-1e-6..=std::f64::consts::PI + 1e-6).contains(&v) {
                return Err(DataError::CacheFormat(format!(
                    "angle {v} at sample {i} pixel {k} outside [0, π]"
                )));
            }
            *slot = v.clamp(0.0, std::f64::consts::PI);
        }
        let label = bytes[label_offset + i];
        if label > 9 {
            return Err(DataError::LabelDomain { index: i, label });
        }
        samples.push(ImageSample { angles, label });
    }
    Ok(samples)
}

/// Write a cache file atomically (temp file + rename).
pub fn write_cache(path: &Path, samples: &[ImageSample]) -> Result<(), DataError> {
    let bytes = encode(samples);
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a cache file.
pub fn read_cache(path: &Path) -> Result<Vec<ImageSample>, DataError> {
    decode(&std::fs::read(path)?)
}
