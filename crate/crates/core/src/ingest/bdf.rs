//! Minimal BDF (BioSemi 24-bit) reader and writer.
//!
//! Layout: a 256-byte fixed header, then 256 bytes of header per channel
//! (field-major: all labels, then all transducers, ...), then data records
//! of 3-byte little-endian two's-complement samples, record-major.
//!
//! Only single-rate files are supported: every channel must declare the same
//! samples-per-record. Channels labeled "Status" (trigger lines) are dropped
//! on read with a warning.

use std::fs;
use std::path::Path;

use crate::ingest::IngestError;
use crate::mat::Mat;
use crate::model::{ClassLabel, Recording};

pub const BDF_DIGITAL_MIN: i32 = -8_388_608;
pub const BDF_DIGITAL_MAX: i32 = 8_388_607;

const FIXED_HEADER_LEN: usize = 256;
const PER_CHANNEL_HEADER_LEN: usize = 256;

#[derive(Debug, Clone)]
pub struct BdfChannel {
    pub label: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub samples_per_record: usize,
}

#[derive(Debug, Clone)]
pub struct BdfHeader {
    pub n_records: i64,
    pub record_duration_s: f64,
    pub channels: Vec<BdfChannel>,
}

impl BdfHeader {
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

fn ascii_field(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).trim().to_string()
}

fn parse_num<T: std::str::FromStr>(bytes: &[u8], field: &'static str) -> Result<T, IngestError> {
    let s = ascii_field(bytes);
    s.parse().map_err(|_| IngestError::BadHeaderField {
        field,
        value: s.clone(),
    })
}

/// Format a number into an EDF/BDF ASCII field of `width` chars, reducing
/// precision until it fits. Returns the string and its re-parsed value so
/// the writer can digitize against exactly what a reader will see.
fn format_field(v: f64, width: usize) -> (String, f64) {
    if v == v.trunc() && v.abs() < 1e7 {
        let s = format!("{}", v as i64);
        if s.len() <= width {
            let parsed = s.parse().unwrap();
            return (s, parsed);
        }
    }
    for prec in (0..=6).rev() {
        let s = format!("{v:.prec$}");
        if s.len() <= width {
            let parsed = s.parse().unwrap();
            return (s, parsed);
        }
    }
    let s = format!("{:.0}", v);
    let parsed = s.parse().unwrap_or(v);
    (s, parsed)
}

fn pad(s: &str, width: usize) -> Vec<u8> {
    let mut out = s.as_bytes().to_vec();
    out.truncate(width);
    out.resize(width, b' ');
    out
}

fn parse_header(bytes: &[u8]) -> Result<BdfHeader, IngestError> {
    if bytes.len() < FIXED_HEADER_LEN {
        return Err(IngestError::TruncatedFile {
            expected: FIXED_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if bytes[0] != 0xFF || &bytes[1..8] != b"BIOSEMI" {
        return Err(IngestError::BadMagic {
            context: "not a BDF file (expected 0xFF + BIOSEMI)".into(),
        });
    }
    let n_records: i64 = parse_num(&bytes[236..244], "n_records")?;
    let record_duration_s: f64 = parse_num(&bytes[244..252], "record_duration")?;
    let n_channels: usize = parse_num(&bytes[252..256], "n_channels")?;
    if n_channels == 0 {
        return Err(IngestError::BadHeaderField {
            field: "n_channels",
            value: "0".into(),
        });
    }

    let header_len = FIXED_HEADER_LEN + n_channels * PER_CHANNEL_HEADER_LEN;
    if bytes.len() < header_len {
        return Err(IngestError::TruncatedFile {
            expected: header_len as u64,
            actual: bytes.len() as u64,
        });
    }

    // Field-major channel headers.
    let field = |base: usize, width: usize, ch: usize| -> &[u8] {
        let start = FIXED_HEADER_LEN + base * n_channels + ch * width;
        &bytes[start..start + width]
    };
    let mut channels = Vec::with_capacity(n_channels);
    for ch in 0..n_channels {
        let label = ascii_field(field(0, 16, ch));
        let physical_min: f64 = parse_num(field(16 + 80 + 8, 8, ch), "physical_min")?;
        let physical_max: f64 = parse_num(field(16 + 80 + 8 + 8, 8, ch), "physical_max")?;
        let digital_min: i32 = parse_num(field(16 + 80 + 8 + 16, 8, ch), "digital_min")?;
        let digital_max: i32 = parse_num(field(16 + 80 + 8 + 24, 8, ch), "digital_max")?;
        let samples_per_record: usize =
            parse_num(field(16 + 80 + 8 + 32 + 80, 8, ch), "samples_per_record")?;
        if digital_max == digital_min {
            return Err(IngestError::BadHeaderField {
                field: "digital range",
                value: format!("{digital_min}..{digital_max}"),
            });
        }
        channels.push(BdfChannel {
            label,
            physical_min,
            physical_max,
            digital_min,
            digital_max,
            samples_per_record,
        });
    }
    Ok(BdfHeader {
        n_records,
        record_duration_s,
        channels,
    })
}

/// Parse just the header of a BDF file.
pub fn read_bdf_header(path: &Path) -> Result<BdfHeader, IngestError> {
    let bytes = fs::read(path)?;
    parse_header(&bytes)
}

/// Read a BDF file into a recording, scaling each channel to physical units.
pub fn read_bdf(path: &Path, subject_id: &str, label: ClassLabel) -> Result<Recording, IngestError> {
    let bytes = fs::read(path)?;
    let header = parse_header(&bytes)?;
    let n_channels = header.n_channels();

    let spr = header.channels[0].samples_per_record;
    if header.channels.iter().any(|c| c.samples_per_record != spr) {
        return Err(IngestError::MixedRates);
    }
    if spr == 0 || header.record_duration_s <= 0.0 {
        return Err(IngestError::UnsupportedLayout {
            reason: "zero samples per record or nonpositive record duration".into(),
        });
    }

    let header_len = (FIXED_HEADER_LEN + n_channels * PER_CHANNEL_HEADER_LEN) as u64;
    let record_bytes = 3 * spr as u64 * n_channels as u64;
    let n_records = if header.n_records >= 0 {
        header.n_records as u64
    } else {
        // Unknown record count: derive it from the payload size.
        let payload = bytes.len() as u64 - header_len;
        if payload % record_bytes != 0 {
            return Err(IngestError::TruncatedFile {
                expected: header_len + (payload / record_bytes + 1) * record_bytes,
                actual: bytes.len() as u64,
            });
        }
        payload / record_bytes
    };
    let expected = header_len + n_records * record_bytes;
    if (bytes.len() as u64) != expected {
        return Err(IngestError::TruncatedFile {
            expected,
            actual: bytes.len() as u64,
        });
    }

    let keep: Vec<usize> = (0..n_channels)
        .filter(|&ch| {
            if header.channels[ch].label == "Status" {
                log::warn!("dropping trigger channel {ch} (\"Status\") from {path:?}");
                false
            } else {
                true
            }
        })
        .collect();

    let n_samples = n_records as usize * spr;
    let mut data = Mat::zeros(keep.len(), n_samples);
    let payload = &bytes[header_len as usize..];
    for rec in 0..n_records as usize {
        let rec_base = rec * record_bytes as usize;
        for (row, &ch) in keep.iter().enumerate() {
            let c = &header.channels[ch];
            let gain = (c.physical_max - c.physical_min)
                / (c.digital_max as f64 - c.digital_min as f64);
            let ch_base = rec_base + ch * spr * 3;
            let out = &mut data.row_mut(row)[rec * spr..(rec + 1) * spr];
            for (s, v) in out.iter_mut().enumerate() {
                let b = &payload[ch_base + 3 * s..ch_base + 3 * s + 3];
                let ext = if b[2] & 0x80 != 0 { 0xFF } else { 0x00 };
                let digital = i32::from_le_bytes([b[0], b[1], b[2], ext]);
                *v = ((digital - c.digital_min) as f64 * gain + c.physical_min) as f32;
            }
        }
    }

    Ok(Recording {
        subject_id: subject_id.to_string(),
        label,
        sample_rate_hz: spr as f64 / header.record_duration_s,
        channel_names: keep
            .iter()
            .map(|&ch| header.channels[ch].label.clone())
            .collect(),
        data,
    })
}

/// Write a recording as a single-rate BDF file with 1-second records and the
/// given physical range on every channel. Requires an integer sample rate and
/// a whole number of records.
pub fn write_bdf(
    r: &Recording,
    path: &Path,
    physical_min: f64,
    physical_max: f64,
) -> Result<(), IngestError> {
    let fs_hz = r.sample_rate_hz;
    if fs_hz <= 0.0 || fs_hz.fract() != 0.0 {
        return Err(IngestError::UnsupportedLayout {
            reason: format!("sample rate {fs_hz} Hz is not a positive integer"),
        });
    }
    let spr = fs_hz as usize;
    if r.n_samples() % spr != 0 {
        return Err(IngestError::UnsupportedLayout {
            reason: format!(
                "{} samples do not fill whole 1 s records at {} Hz",
                r.n_samples(),
                spr
            ),
        });
    }
    let n_records = r.n_samples() / spr;
    let n_channels = r.n_channels();

    // Digitize against the re-parsed ASCII range so read_bdf inverts exactly.
    let (pmin_s, pmin) = format_field(physical_min, 8);
    let (pmax_s, pmax) = format_field(physical_max, 8);
    if pmax <= pmin {
        return Err(IngestError::UnsupportedLayout {
            reason: format!("empty physical range [{pmin}, {pmax}]"),
        });
    }
    let gain = (pmax - pmin) / (BDF_DIGITAL_MAX as f64 - BDF_DIGITAL_MIN as f64);

    let header_len = FIXED_HEADER_LEN + n_channels * PER_CHANNEL_HEADER_LEN;
    let mut buf = Vec::with_capacity(header_len + 3 * n_channels * r.n_samples());
    buf.push(0xFF);
    buf.extend_from_slice(b"BIOSEMI");
    buf.extend_from_slice(&pad("X X X X", 80)); // patient id
    buf.extend_from_slice(&pad("Startdate 01-JAN-2000", 80)); // recording id
    buf.extend_from_slice(&pad("01.01.00", 8));
    buf.extend_from_slice(&pad("00.00.00", 8));
    buf.extend_from_slice(&pad(&header_len.to_string(), 8));
    buf.extend_from_slice(&pad("24BIT", 44));
    buf.extend_from_slice(&pad(&n_records.to_string(), 8));
    buf.extend_from_slice(&pad("1", 8));
    buf.extend_from_slice(&pad(&n_channels.to_string(), 4));

    let mut emit_per_channel = |width: usize, f: &dyn Fn(usize) -> String| {
        for ch in 0..n_channels {
            buf.extend_from_slice(&pad(&f(ch), width));
        }
    };
    emit_per_channel(16, &|ch| r.channel_names[ch].clone());
    emit_per_channel(80, &|_| "active electrode".into());
    emit_per_channel(8, &|_| "uV".into());
    emit_per_channel(8, &|_| pmin_s.clone());
    emit_per_channel(8, &|_| pmax_s.clone());
    emit_per_channel(8, &|_| BDF_DIGITAL_MIN.to_string());
    emit_per_channel(8, &|_| BDF_DIGITAL_MAX.to_string());
    emit_per_channel(80, &|_| String::new());
    emit_per_channel(8, &|_| spr.to_string());
    emit_per_channel(32, &|_| String::new());
    debug_assert_eq!(buf.len(), header_len);

    for rec in 0..n_records {
        for ch in 0..n_channels {
            let samples = &r.data.row(ch)[rec * spr..(rec + 1) * spr];
            for &v in samples {
                let p = v as f64;
                if p < pmin || p > pmax {
                    return Err(IngestError::RangeOverflow {
                        channel: ch,
                        value: p,
                        min: pmin,
                        max: pmax,
                    });
                }
                let digital = ((p - pmin) / gain).round() as i64 + BDF_DIGITAL_MIN as i64;
                let digital = digital.clamp(BDF_DIGITAL_MIN as i64, BDF_DIGITAL_MAX as i64) as i32;
                let le = digital.to_le_bytes();
                buf.extend_from_slice(&le[..3]);
            }
        }
    }

    fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn recording(n_ch: usize, seconds: usize, fs: usize, seed: u64) -> Recording {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = seconds * fs;
        let data: Vec<f32> = (0..n_ch * n).map(|_| rng.gen_range(-180.0..180.0)).collect();
        Recording {
            subject_id: "S01".into(),
            label: ClassLabel::Hc,
            sample_rate_hz: fs as f64,
            channel_names: (0..n_ch).map(|i| format!("A{i}")).collect(),
            data: Mat::from_vec(n_ch, n, data),
        }
    }

    #[test]
    fn round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.bdf");
        let r = recording(4, 3, 256, 7);
        let (pmin, pmax) = (-200.0, 200.0);
        write_bdf(&r, &path, pmin, pmax).unwrap();
        let back = read_bdf(&path, "S01", ClassLabel::Hc).unwrap();
        assert_eq!(back.n_channels(), 4);
        assert_eq!(back.n_samples(), r.n_samples());
        assert_eq!(back.sample_rate_hz, 256.0);
        let bound = (pmax - pmin) / (1u32 << 24) as f64;
        let max_err = r
            .data
            .as_slice()
            .iter()
            .zip(back.data.as_slice())
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= bound, "max_err {max_err} > bound {bound}");
    }

    #[test]
    fn zero_recording_encodes_physical_zero_level() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.bdf");
        let mut r = recording(2, 1, 16, 0);
        r.data = Mat::zeros(2, 16);
        write_bdf(&r, &path, -100.0, 100.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header_len = 256 + 2 * 256;
        // With a symmetric range, physical zero digitizes to digital 0.
        let gain = 200.0 / (BDF_DIGITAL_MAX as f64 - BDF_DIGITAL_MIN as f64);
        let expect = ((0.0 - (-100.0)) / gain).round() as i64 + BDF_DIGITAL_MIN as i64;
        let le = (expect as i32).to_le_bytes();
        for chunk in bytes[header_len..].chunks_exact(3) {
            assert_eq!(chunk, &le[..3]);
        }
    }

    #[test]
    fn out_of_range_sample_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("over.bdf");
        let mut r = recording(2, 1, 16, 1);
        r.data.set(1, 3, 500.0);
        match write_bdf(&r, &path, -200.0, 200.0) {
            Err(IngestError::RangeOverflow { channel, .. }) => assert_eq!(channel, 1),
            other => panic!("expected RangeOverflow, got {other:?}"),
        }
    }

    #[test]
    fn bad_first_byte_is_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bdf");
        let r = recording(2, 1, 16, 2);
        write_bdf(&r, &path, -200.0, 200.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = 0x00;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_bdf(&path, "S01", ClassLabel::Hc),
            Err(IngestError::BadMagic { .. })
        ));
    }

    #[test]
    fn missing_record_is_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.bdf");
        let r = recording(2, 10, 16, 3);
        write_bdf(&r, &path, -200.0, 200.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let record_bytes = 3 * 16 * 2;
        bytes.truncate(bytes.len() - record_bytes); // header still claims 10
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_bdf(&path, "S01", ClassLabel::Hc),
            Err(IngestError::TruncatedFile { .. })
        ));
    }

    #[test]
    fn mixed_rates_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.bdf");
        let r = recording(2, 1, 16, 4);
        write_bdf(&r, &path, -200.0, 200.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // samples-per-record region starts 216 bytes/channel into the channel headers.
        let start = 256 + 216 * 2 + 8;
        bytes[start..start + 8].copy_from_slice(b"8       ");
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_bdf(&path, "S01", ClassLabel::Hc),
            Err(IngestError::MixedRates)
        ));
    }

    #[test]
    fn status_channel_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("status.bdf");
        let mut r = recording(3, 1, 16, 5);
        r.channel_names[2] = "Status".into();
        write_bdf(&r, &path, -200.0, 200.0).unwrap();
        let back = read_bdf(&path, "S01", ClassLabel::Hc).unwrap();
        assert_eq!(back.n_channels(), 2);
        assert_eq!(back.channel_names, vec!["A0".to_string(), "A1".to_string()]);
    }
}
