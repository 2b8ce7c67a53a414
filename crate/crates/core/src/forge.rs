//! Epoch-to-image pipeline: split channels into three contiguous groups,
//! average each, transform each average with the SPWVD, resize, min-max
//! normalize, and stack the three planes as one image.

use std::io::Read;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::ingest::{read_raw_tensor, write_raw_tensor, IngestError};
use crate::mat::Mat;
use crate::model::{ClassLabel, Epoch, ModelError};
use crate::tfr::{spwvd, SpwvdConfig, TfrError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// One min-max over all three planes; preserves relative inter-group
    /// amplitude.
    JointMinMax,
    /// Independent min-max per plane.
    PerPlaneMinMax,
}

#[derive(Debug, Clone)]
pub struct ForgeConfig {
    pub spwvd: SpwvdConfig,
    pub out_height: usize,
    pub out_width: usize,
    pub normalization: Normalization,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        Self {
            spwvd: SpwvdConfig::default(),
            out_height: 256,
            out_width: 256,
            normalization: Normalization::JointMinMax,
        }
    }
}

/// Where an image came from; the evaluation harness keys on this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub subject_id: String,
    pub label: ClassLabel,
    pub epoch_index: usize,
}

/// Three stacked planes of shape height x width, values in [0, 1],
/// stored contiguously plane-major.
#[derive(Debug, Clone)]
pub struct ForgedImage {
    pub height: usize,
    pub width: usize,
    pub planes: Vec<f32>,
    pub provenance: Provenance,
}

impl ForgedImage {
    pub fn plane(&self, p: usize) -> &[f32] {
        let sz = self.height * self.width;
        &self.planes[p * sz..(p + 1) * sz]
    }

    #[inline]
    pub fn get(&self, p: usize, i: usize, j: usize) -> f32 {
        self.planes[(p * self.height + i) * self.width + j]
    }
}

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("channel split needs at least 3 channels, got {n_channels}")]
    TooFewChannels { n_channels: usize },
    #[error("channel group {group:?} is empty or out of range for {n_channels} channels")]
    BadGroup {
        group: Range<usize>,
        n_channels: usize,
    },
    #[error("plane shapes disagree: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("resize needs source and target dims >= 2, got {rows}x{cols} -> {out_rows}x{out_cols}")]
    DegenerateInput {
        rows: usize,
        cols: usize,
        out_rows: usize,
        out_cols: usize,
    },
    #[error("bad forged-dataset file: {reason}")]
    BadIndex { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tfr(#[from] TfrError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Partition `0..n_channels` into three contiguous groups, as even as
/// possible with earlier groups larger: 32 -> (11, 11, 10).
pub fn split_channels(e: &Epoch) -> Result<[Range<usize>; 3], ForgeError> {
    let k = e.data.rows();
    if k < 3 {
        return Err(ForgeError::TooFewChannels { n_channels: k });
    }
    let q = k / 3;
    let r = k % 3;
    let sizes = [q + usize::from(r >= 1), q + usize::from(r >= 2), q];
    let mut start = 0;
    let ranges = sizes.map(|s| {
        let range = start..start + s;
        start += s;
        range
    });
    Ok(ranges)
}

/// Arithmetic mean across the group's channels, per sample, accumulated in
/// f64.
pub fn average_group(e: &Epoch, group: Range<usize>) -> Result<Vec<f64>, ForgeError> {
    let k = e.data.rows();
    if group.is_empty() || group.end > k {
        return Err(ForgeError::BadGroup {
            group,
            n_channels: k,
        });
    }
    let n = e.data.cols();
    let mut acc = vec![0.0f64; n];
    for ch in group.clone() {
        for (a, &v) in acc.iter_mut().zip(e.data.row(ch)) {
            *a += v as f64;
        }
    }
    let scale = 1.0 / group.len() as f64;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(acc)
}

/// Bilinear resize with a corner-aligned grid: output pixel (i, j) samples
/// the source at (i*(H0-1)/(H-1), j*(W0-1)/(W-1)), so the four corners map
/// exactly and same-size resize is the identity.
pub fn resize_bilinear(
    m: &Mat<f64>,
    out_rows: usize,
    out_cols: usize,
) -> Result<Mat<f64>, ForgeError> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows < 2 || cols < 2 || out_rows < 2 || out_cols < 2 {
        return Err(ForgeError::DegenerateInput {
            rows,
            cols,
            out_rows,
            out_cols,
        });
    }
    let row_scale = (rows - 1) as f64 / (out_rows - 1) as f64;
    let col_scale = (cols - 1) as f64 / (out_cols - 1) as f64;
    let mut out = Mat::zeros64(out_rows, out_cols);
    for i in 0..out_rows {
        let sy = i as f64 * row_scale;
        let y0 = (sy.floor() as usize).min(rows - 1);
        let y1 = (y0 + 1).min(rows - 1);
        let fy = sy - y0 as f64;
        for j in 0..out_cols {
            let sx = j as f64 * col_scale;
            let x0 = (sx.floor() as usize).min(cols - 1);
            let x1 = (x0 + 1).min(cols - 1);
            let fx = sx - x0 as f64;
            let v = (1.0 - fy) * ((1.0 - fx) * m.get(y0, x0) + fx * m.get(y0, x1))
                + fy * ((1.0 - fx) * m.get(y1, x0) + fx * m.get(y1, x1));
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Min-max normalize three equally shaped planes into [0, 1] and stack them.
/// A zero-range input (constant planes) maps to all zeros.
pub fn normalize_stack(
    planes: [&Mat<f64>; 3],
    mode: Normalization,
    provenance: Provenance,
) -> Result<ForgedImage, ForgeError> {
    let shape = (planes[0].rows(), planes[0].cols());
    for p in &planes[1..] {
        if (p.rows(), p.cols()) != shape {
            return Err(ForgeError::ShapeMismatch {
                a: shape,
                b: (p.rows(), p.cols()),
            });
        }
    }
    let (h, w) = shape;
    let mut out = Vec::with_capacity(3 * h * w);
    let range_of = |vals: &[&Mat<f64>]| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in vals {
            for &v in m.as_slice() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    };
    match mode {
        Normalization::JointMinMax => {
            let (lo, hi) = range_of(&planes[..]);
            let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
            for p in planes {
                out.extend(p.as_slice().iter().map(|&v| ((v - lo) * scale) as f32));
            }
        }
        Normalization::PerPlaneMinMax => {
            for p in planes {
                let (lo, hi) = range_of(&[p]);
                let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
                out.extend(p.as_slice().iter().map(|&v| ((v - lo) * scale) as f32));
            }
        }
    }
    Ok(ForgedImage {
        height: h,
        width: w,
        planes: out,
        provenance,
    })
}

/// Full pipeline for one epoch: split, average, SPWVD, resize, normalize,
/// stack. Plane order follows group order (group 1 -> plane 0).
pub fn forge_epoch(
    e: &Epoch,
    cfg: &ForgeConfig,
    sample_rate_hz: f64,
) -> Result<ForgedImage, ForgeError> {
    let groups = split_channels(e)?;
    let mut resized = Vec::with_capacity(3);
    for group in groups {
        let avg = average_group(e, group)?;
        let tfr = spwvd(&avg, &cfg.spwvd, sample_rate_hz)?;
        resized.push(resize_bilinear(&tfr.values, cfg.out_height, cfg.out_width)?);
    }
    normalize_stack(
        [&resized[0], &resized[1], &resized[2]],
        cfg.normalization,
        Provenance {
            subject_id: e.subject_id.clone(),
            label: e.label,
            epoch_index: e.epoch_index,
        },
    )
}

/// Write a binary P6 PPM, maxval 255, plane 0 -> red, 1 -> green, 2 -> blue.
pub fn export_ppm(img: &ForgedImage, path: &Path) -> Result<(), ForgeError> {
    let mut buf = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    buf.reserve(3 * img.height * img.width);
    for i in 0..img.height {
        for j in 0..img.width {
            for p in 0..3 {
                buf.push((img.get(p, i, j) * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    std::fs::write(path, buf).map_err(IngestError::from)?;
    Ok(())
}

/// Read back a P6 PPM written by [`export_ppm`] into planes scaled to [0, 1].
pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<f32>), ForgeError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(IngestError::from)?;
    let bad = |reason: &str| ForgeError::BadIndex {
        reason: format!("{path:?}: {reason}"),
    };
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String, ForgeError> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    if token(&mut pos)? != "P6" {
        return Err(bad("not a P6 file"));
    }
    let width: usize = token(&mut pos)?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token(&mut pos)?.parse().map_err(|_| bad("bad height"))?;
    if token(&mut pos)? != "255" {
        return Err(bad("maxval must be 255"));
    }
    pos += 1; // single whitespace after maxval
    let payload = &bytes[pos..];
    if payload.len() != 3 * width * height {
        return Err(bad("payload size mismatch"));
    }
    // Interleaved rgb -> plane-major.
    let mut planes = vec![0.0f32; 3 * width * height];
    for (idx, &b) in payload.iter().enumerate() {
        let p = idx % 3;
        let pix = idx / 3;
        planes[p * width * height + pix] = b as f32 / 255.0;
    }
    Ok((height, width, planes))
}

const INDEX_FILE: &str = "index.txt";

/// Persist a forged dataset: one raw tensor file per image (3 "channels" of
/// height*width samples) plus a line-oriented index mapping each file to
/// (subject_id, label, epoch_index). The index header carries the image dims.
pub fn save_forged_dataset(dir: &Path, images: &[ForgedImage]) -> Result<(), ForgeError> {
    std::fs::create_dir_all(dir).map_err(IngestError::from)?;
    let mut index = String::new();
    if let Some(first) = images.first() {
        index.push_str(&format!("forged-index,3,{},{}\n", first.height, first.width));
    } else {
        index.push_str("forged-index,3,0,0\n");
    }
    index.push_str("file,subject_id,label,epoch_index\n");
    for img in images {
        let name = format!(
            "{}_e{:04}.ft",
            img.provenance.subject_id, img.provenance.epoch_index
        );
        write_raw_tensor(&dir.join(&name), 3, img.height * img.width, 0.0, &img.planes)?;
        index.push_str(&format!(
            "{name},{},{},{}\n",
            img.provenance.subject_id, img.provenance.label, img.provenance.epoch_index
        ));
    }
    std::fs::write(dir.join(INDEX_FILE), index).map_err(IngestError::from)?;
    Ok(())
}

/// Load a forged dataset written by [`save_forged_dataset`].
pub fn load_forged_dataset(dir: &Path) -> Result<Vec<ForgedImage>, ForgeError> {
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path).map_err(IngestError::from)?;
    let bad = |reason: String| ForgeError::BadIndex { reason };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty index".into()))?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 4 || dims[0] != "forged-index" || dims[1] != "3" {
        return Err(bad(format!("unrecognized header {header:?}")));
    }
    let height: usize = dims[2].parse().map_err(|_| bad("bad height".into()))?;
    let width: usize = dims[3].parse().map_err(|_| bad("bad width".into()))?;
    lines.next(); // column names
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(format!("malformed row {line:?}")));
        }
        let label = ClassLabel::parse(cols[2])
            .ok_or_else(|| bad(format!("unknown label {:?}", cols[2])))?;
        let epoch_index: usize = cols[3].parse().map_err(|_| bad("bad epoch index".into()))?;
        let tensor = read_raw_tensor(&dir.join(cols[0]))?;
        if tensor.n_channels != 3 || tensor.n_samples != height * width {
            return Err(bad(format!("{:?} has unexpected dims", cols[0])));
        }
        out.push(ForgedImage {
            height,
            width,
            planes: tensor.data,
            provenance: Provenance {
                subject_id: cols[1].to_string(),
                label,
                epoch_index,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch_of(data: Mat<f32>) -> Epoch {
        Epoch {
            subject_id: "S01".into(),
            label: ClassLabel::Hc,
            epoch_index: 0,
            data,
        }
    }

    fn provenance() -> Provenance {
        Provenance {
            subject_id: "S01".into(),
            label: ClassLabel::Hc,
            epoch_index: 0,
        }
    }

    fn tiny_cfg() -> ForgeConfig {
        ForgeConfig {
            spwvd: SpwvdConfig {
                n_freq_bins: 64,
                time_window: (crate::tfr::WindowKind::Hamming, 5),
                lag_window: (crate::tfr::WindowKind::Hamming, 15),
            },
            out_height: 16,
            out_width: 16,
            normalization: Normalization::JointMinMax,
        }
    }

    #[test]
    fn split_sizes_match_even_division() {
        let e = epoch_of(Mat::zeros(32, 8));
        let g = split_channels(&e).unwrap();
        assert_eq!(g, [0..11, 11..22, 22..32]);
        let e = epoch_of(Mat::zeros(30, 8));
        assert_eq!(split_channels(&e).unwrap(), [0..10, 10..20, 20..30]);
        let e = epoch_of(Mat::zeros(3, 8));
        assert_eq!(split_channels(&e).unwrap(), [0..1, 1..2, 2..3]);
    }

    #[test]
    fn too_few_channels_error() {
        let e = epoch_of(Mat::zeros(2, 8));
        assert!(matches!(
            split_channels(&e),
            Err(ForgeError::TooFewChannels { n_channels: 2 })
        ));
    }

    #[test]
    fn average_of_identical_channels_is_the_channel() {
        let row: Vec<f32> = (0..16).map(|i| i as f32 * 0.5 - 3.0).collect();
        let mut data = Mat::zeros(4, 16);
        for ch in 0..4 {
            data.row_mut(ch).copy_from_slice(&row);
        }
        let avg = average_group(&epoch_of(data), 0..4).unwrap();
        for (a, &b) in avg.iter().zip(&row) {
            assert_eq!(*a, b as f64);
        }
    }

    #[test]
    fn opposite_channels_cancel() {
        let row: Vec<f32> = (0..16).map(|i| (i as f32).sin()).collect();
        let neg: Vec<f32> = row.iter().map(|v| -v).collect();
        let mut data = Mat::zeros(2, 16);
        data.row_mut(0).copy_from_slice(&row);
        data.row_mut(1).copy_from_slice(&neg);
        let avg = average_group(&epoch_of(data), 0..2).unwrap();
        assert!(avg.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn average_matches_per_sample_summation_oracle() {
        let mut state = 123u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) as f32 * 10.0 - 5.0
        };
        let mut data = Mat::zeros(11, 1024);
        for ch in 0..11 {
            for t in 0..1024 {
                data.set(ch, t, next());
            }
        }
        let e = epoch_of(data);
        let avg = average_group(&e, 0..11).unwrap();
        for t in 0..1024 {
            let mut sum = 0.0f64;
            for ch in 0..11 {
                sum += e.data.get(ch, t) as f64;
            }
            assert!((avg[t] - sum / 11.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn same_size_resize_is_identity() {
        let m = Mat::from_vec(5, 7, (0..35).map(|i| (i as f64).sin()).collect());
        let out = resize_bilinear(&m, 5, 7).unwrap();
        assert_eq!(out.as_slice(), m.as_slice());
    }

    #[test]
    fn constant_resize_stays_constant() {
        let m = Mat::filled(4, 6, 2.5f64);
        let out = resize_bilinear(&m, 17, 9).unwrap();
        assert!(out.as_slice().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn resize_respects_source_bounds_and_corners() {
        let mut m = Mat::zeros64(20, 10);
        for i in 0..20 {
            for j in 0..10 {
                m.set(i, j, ((i * 7 + j * 13) % 17) as f64 - 8.0);
            }
        }
        let out = resize_bilinear(&m, 8, 8).unwrap();
        let (lo, hi) = m
            .as_slice()
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        for &v in out.as_slice() {
            assert!(v >= lo && v <= hi);
        }
        assert_eq!(out.get(0, 0), m.get(0, 0));
        assert_eq!(out.get(0, 7), m.get(0, 9));
        assert_eq!(out.get(7, 0), m.get(19, 0));
        assert_eq!(out.get(7, 7), m.get(19, 9));
    }

    #[test]
    fn degenerate_resize_is_rejected() {
        let m = Mat::filled(1, 8, 0.0f64);
        assert!(matches!(
            resize_bilinear(&m, 4, 4),
            Err(ForgeError::DegenerateInput { .. })
        ));
    }

    #[test]
    fn constant_planes_normalize_to_zero() {
        let p = Mat::filled(4, 4, 3.0f64);
        let img = normalize_stack([&p, &p, &p], Normalization::JointMinMax, provenance()).unwrap();
        assert!(img.planes.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn joint_min_max_is_an_affine_map() {
        let mut p1 = Mat::filled(2, 2, 4.0f64);
        p1.set(0, 0, 2.0);
        let mut p2 = Mat::filled(2, 2, 4.0f64);
        p2.set(1, 1, 6.0);
        let p3 = Mat::filled(2, 2, 4.0f64);
        let img =
            normalize_stack([&p1, &p2, &p3], Normalization::JointMinMax, provenance()).unwrap();
        assert_eq!(img.get(0, 0, 0), 0.0);
        assert_eq!(img.get(1, 1, 1), 1.0);
        assert_eq!(img.get(2, 0, 1), 0.5);
    }

    #[test]
    fn joint_mode_preserves_inter_plane_order() {
        let mut p1 = Mat::filled(3, 3, 0.0f64);
        let mut p2 = Mat::filled(3, 3, 0.0f64);
        let p3 = Mat::filled(3, 3, 9.0f64);
        for i in 0..3 {
            for j in 0..3 {
                p1.set(i, j, (i * 3 + j) as f64);
                p2.set(i, j, (i * 3 + j) as f64 + 0.5);
            }
        }
        let img =
            normalize_stack([&p1, &p2, &p3], Normalization::JointMinMax, provenance()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(img.get(0, i, j) < img.get(1, i, j));
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Mat::filled(2, 2, 0.0f64);
        let b = Mat::filled(2, 3, 0.0f64);
        assert!(matches!(
            normalize_stack([&a, &a, &b], Normalization::JointMinMax, provenance()),
            Err(ForgeError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_epoch_forges_to_zero_image() {
        let e = epoch_of(Mat::zeros(6, 300));
        let img = forge_epoch(&e, &tiny_cfg(), 128.0).unwrap();
        assert_eq!((img.height, img.width), (16, 16));
        assert!(img.planes.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forged_values_stay_in_unit_interval() {
        let mut data = Mat::zeros(6, 300);
        for ch in 0..6 {
            for t in 0..300 {
                data.set(ch, t, ((t as f64 * 0.3 + ch as f64 * 0.7).sin() * 5.0) as f32);
            }
        }
        let img = forge_epoch(&epoch_of(data), &tiny_cfg(), 128.0).unwrap();
        assert!(img.planes.iter().all(|&v| (0.0..=1.0).contains(&v) && v.is_finite()));
    }

    #[test]
    fn forge_equals_manual_stage_composition() {
        let mut data = Mat::zeros(7, 256);
        for ch in 0..7 {
            for t in 0..256 {
                let v = ((t as f64 * 0.11 + ch as f64).sin() * 3.0) as f32;
                data.set(ch, t, v);
            }
        }
        let e = epoch_of(data);
        let cfg = tiny_cfg();
        let fused = forge_epoch(&e, &cfg, 128.0).unwrap();

        let groups = split_channels(&e).unwrap();
        let mut planes = Vec::new();
        for group in groups {
            let avg = average_group(&e, group).unwrap();
            let tfr = spwvd(&avg, &cfg.spwvd, 128.0).unwrap();
            planes.push(resize_bilinear(&tfr.values, 16, 16).unwrap());
        }
        let manual = normalize_stack(
            [&planes[0], &planes[1], &planes[2]],
            cfg.normalization,
            provenance(),
        )
        .unwrap();
        assert_eq!(fused.planes, manual.planes);
    }

    #[test]
    fn ppm_layout_and_readback() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let h = 16;
        let w = 16;
        let planes: Vec<f32> = (0..3 * h * w).map(|i| (i % 256) as f32 / 255.0).collect();
        let img = ForgedImage {
            height: h,
            width: w,
            planes: planes.clone(),
            provenance: provenance(),
        };
        export_ppm(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = format!("P6\n{w} {h}\n255\n");
        assert_eq!(&bytes[..header.len()], header.as_bytes());
        assert_eq!(bytes.len(), header.len() + 3 * h * w);

        let (rh, rw, rplanes) = read_ppm(&path).unwrap();
        assert_eq!((rh, rw), (h, w));
        for (a, b) in rplanes.iter().zip(&planes) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn zero_image_ppm_payload_is_zero_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.ppm");
        let img = ForgedImage {
            height: 8,
            width: 8,
            planes: vec![0.0; 3 * 64],
            provenance: provenance(),
        };
        export_ppm(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header_len = "P6\n8 8\n255\n".len();
        assert!(bytes[header_len..].iter().all(|&b| b == 0));
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let images: Vec<ForgedImage> = (0..4)
            .map(|i| ForgedImage {
                height: 8,
                width: 8,
                planes: (0..192).map(|j| ((i * 193 + j) % 100) as f32 / 99.0).collect(),
                provenance: Provenance {
                    subject_id: format!("S{:02}", i / 2),
                    label: if i % 2 == 0 { ClassLabel::Hc } else { ClassLabel::Pd },
                    epoch_index: i % 2,
                },
            })
            .collect();
        save_forged_dataset(dir.path(), &images).unwrap();
        let back = load_forged_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in back.iter().zip(&images) {
            assert_eq!(a.planes, b.planes);
            assert_eq!(a.provenance, b.provenance);
        }
    }
}
