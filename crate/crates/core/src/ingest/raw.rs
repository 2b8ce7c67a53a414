//! Raw tensor file format: a trivially parseable container for one
//! channels-by-samples float matrix.
//!
//! Byte layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "FRGTENS1"
//! 8       4     n_channels: u32
//! 12      8     n_samples:  u64
//! 20      8     sample_rate_hz: f64
//! 28      4*n_channels*n_samples   payload: f32, channel-major
//! ```
//!
//! The payload round-trips bit-exactly; files carry no subject metadata
//! (that lives in the manifest).

use std::fs;
use std::path::Path;

use crate::ingest::IngestError;
use crate::mat::Mat;
use crate::model::{ClassLabel, Recording};

pub const RAW_MAGIC: &[u8; 8] = b"FRGTENS1";
const HEADER_LEN: usize = 28;

/// A decoded raw tensor file: dims, rate, and the channel-major payload.
#[derive(Debug, Clone)]
pub struct RawTensor {
    pub n_channels: usize,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub data: Vec<f32>,
}

pub fn write_raw_tensor(
    path: &Path,
    n_channels: usize,
    n_samples: usize,
    sample_rate_hz: f64,
    data: &[f32],
) -> Result<(), IngestError> {
    assert_eq!(data.len(), n_channels * n_samples, "payload length mismatch");
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * data.len());
    buf.extend_from_slice(RAW_MAGIC);
    buf.extend_from_slice(&(n_channels as u32).to_le_bytes());
    buf.extend_from_slice(&(n_samples as u64).to_le_bytes());
    buf.extend_from_slice(&sample_rate_hz.to_le_bytes());
    for &v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_raw_tensor(path: &Path) -> Result<RawTensor, IngestError> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(IngestError::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[..8] != RAW_MAGIC {
        return Err(IngestError::BadMagic {
            context: format!("{path:?} is not a raw tensor file"),
        });
    }
    let n_channels = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n_samples = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let sample_rate_hz = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let expected = HEADER_LEN as u64 + 4 * (n_channels as u64) * (n_samples as u64);
    if bytes.len() as u64 != expected {
        return Err(IngestError::TruncatedFile {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawTensor {
        n_channels,
        n_samples,
        sample_rate_hz,
        data,
    })
}

/// Persist a recording's signal matrix. Subject id and label are not stored;
/// pass them back to [`read_raw`] from the manifest.
pub fn write_raw(r: &Recording, path: &Path) -> Result<(), IngestError> {
    write_raw_tensor(
        path,
        r.n_channels(),
        r.n_samples(),
        r.sample_rate_hz,
        r.data.as_slice(),
    )
}

pub fn read_raw(path: &Path, subject_id: &str, label: ClassLabel) -> Result<Recording, IngestError> {
    let t = read_raw_tensor(path)?;
    Ok(Recording {
        subject_id: subject_id.to_string(),
        label,
        sample_rate_hz: t.sample_rate_hz,
        channel_names: (0..t.n_channels).map(|i| format!("ch{i:02}")).collect(),
        data: Mat::from_vec(t.n_channels, t.n_samples, t.data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recording_from(data: Vec<f32>, n_ch: usize, n_samples: usize) -> Recording {
        Recording {
            subject_id: "S01".into(),
            label: ClassLabel::Pd,
            sample_rate_hz: 512.0,
            channel_names: (0..n_ch).map(|i| format!("ch{i:02}")).collect(),
            data: Mat::from_vec(n_ch, n_samples, data),
        }
    }

    #[test]
    fn file_size_matches_format_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.ft");
        let r = recording_from(vec![0.5; 32 * 1024], 32, 1024);
        write_raw(&r, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 28 + 131072);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ft");
        std::fs::write(&path, b"NOTMAGIC________________________").unwrap();
        assert!(matches!(
            read_raw_tensor(&path),
            Err(IngestError::BadMagic { .. })
        ));
    }

    #[test]
    fn short_payload_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.ft");
        let r = recording_from(vec![1.0; 4 * 8], 4, 8);
        write_raw(&r, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 4);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_raw_tensor(&path),
            Err(IngestError::TruncatedFile { .. })
        ));
    }

    proptest! {
        // Round trip is the identity on the payload, bit for bit.
        #[test]
        fn round_trip_is_lossless(n_ch in 1usize..6, n_samples in 1usize..50,
                                  seed in any::<u32>()) {
            let mut state = seed;
            let data: Vec<f32> = (0..n_ch * n_samples)
                .map(|_| {
                    state = state.wrapping_mul(1664525).wrapping_add(1013904223);
                    (state as f32 / u32::MAX as f32) * 200.0 - 100.0
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rt.ft");
            let r = recording_from(data.clone(), n_ch, n_samples);
            write_raw(&r, &path).unwrap();
            let back = read_raw(&path, "S01", ClassLabel::Pd).unwrap();
            prop_assert_eq!(back.data.as_slice(), &data[..]);
            prop_assert_eq!(back.sample_rate_hz, 512.0);
        }
    }
}
