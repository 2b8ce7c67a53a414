//! Domain types shared by every pipeline stage, plus epoching.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::mat::Mat;

/// Binary class of a subject. Encoded as HC = 0, PD = 1 everywhere a numeric
/// label is needed, so confusion-matrix orientation is unambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Hc,
    Pd,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Hc => 0,
            ClassLabel::Pd => 1,
        }
    }

    pub fn other(self) -> ClassLabel {
        match self {
            ClassLabel::Hc => ClassLabel::Pd,
            ClassLabel::Pd => ClassLabel::Hc,
        }
    }

    pub fn parse(s: &str) -> Option<ClassLabel> {
        match s.trim() {
            "HC" | "hc" => Some(ClassLabel::Hc),
            "PD" | "pd" => Some(ClassLabel::Pd),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Hc => write!(f, "HC"),
            ClassLabel::Pd => write!(f, "PD"),
        }
    }
}

/// A labeled multichannel recording: `data` is channels x samples, in
/// microvolts, stored as f32 (transforms widen to f64 internally).
#[derive(Debug, Clone)]
pub struct Recording {
    pub subject_id: String,
    pub label: ClassLabel,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub data: Mat<f32>,
}

impl Recording {
    pub fn n_channels(&self) -> usize {
        self.data.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.cols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }
}

/// One fixed-duration slice of a recording, channels x samples.
#[derive(Debug, Clone)]
pub struct Epoch {
    pub subject_id: String,
    pub label: ClassLabel,
    pub epoch_index: usize,
    pub data: Mat<f32>,
}

/// One subject entry of a dataset manifest.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub label: ClassLabel,
    pub path: PathBuf,
}

/// The dataset as a list of per-subject recordings on disk. The file syntax
/// that serializes this lives in the CLI crate; this is the in-memory form.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub epoch_seconds: f64,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self {
            entries,
            epoch_seconds: 2.0,
        }
    }

    /// Subject ids must be unique for folds and provenance to be meaningful.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.subject_id.as_str()) {
                return Err(ModelError::DuplicateSubject {
                    subject_id: e.subject_id.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("channel_names has {names} entries but data has {rows} rows")]
    ShapeMismatch { names: usize, rows: usize },
    #[error("non-finite sample at channel {channel}, sample {sample}")]
    NonFinite { channel: usize, sample: usize },
    #[error("sample rate must be positive, got {rate}")]
    BadRate { rate: f64 },
    #[error("recording has no samples")]
    Empty,
    #[error("fewer than 3 channels ({n_channels}); the channel split needs at least 3")]
    TooFewChannels { n_channels: usize },
    #[error("epoch of {epoch_samples} samples is longer than the recording ({n_samples} samples)")]
    EpochTooLong {
        epoch_samples: usize,
        n_samples: usize,
    },
    #[error("epoch_seconds {epoch_seconds} yields an empty window at {sample_rate_hz} Hz")]
    BadEpochLength {
        epoch_seconds: f64,
        sample_rate_hz: f64,
    },
    #[error("duplicate subject id {subject_id} in manifest")]
    DuplicateSubject { subject_id: String },
}

/// Check every recording invariant: name/row agreement, at least 3 channels,
/// at least one sample, positive rate, all samples finite.
pub fn validate_recording(r: &Recording) -> Result<(), ModelError> {
    if r.channel_names.len() != r.data.rows() {
        return Err(ModelError::ShapeMismatch {
            names: r.channel_names.len(),
            rows: r.data.rows(),
        });
    }
    if r.n_channels() < 3 {
        return Err(ModelError::TooFewChannels {
            n_channels: r.n_channels(),
        });
    }
    if r.n_samples() == 0 {
        return Err(ModelError::Empty);
    }
    if !(r.sample_rate_hz > 0.0) {
        return Err(ModelError::BadRate {
            rate: r.sample_rate_hz,
        });
    }
    for ch in 0..r.n_channels() {
        if let Some(t) = r.data.row(ch).iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                channel: ch,
                sample: t,
            });
        }
    }
    Ok(())
}

/// Number of samples per epoch window for a given duration and rate.
pub fn epoch_samples(epoch_seconds: f64, sample_rate_hz: f64) -> usize {
    (epoch_seconds * sample_rate_hz).round() as usize
}

/// Cut a recording into consecutive non-overlapping epochs of
/// `epoch_seconds`. Epoch `k` covers samples `[k*L, (k+1)*L)`; trailing
/// samples that do not fill a whole window are discarded.
pub fn epoch_recording(r: &Recording, epoch_seconds: f64) -> Result<Vec<Epoch>, ModelError> {
    let window = epoch_samples(epoch_seconds, r.sample_rate_hz);
    if window == 0 {
        return Err(ModelError::BadEpochLength {
            epoch_seconds,
            sample_rate_hz: r.sample_rate_hz,
        });
    }
    let n = r.n_samples();
    if n < window {
        return Err(ModelError::EpochTooLong {
            epoch_samples: window,
            n_samples: n,
        });
    }
    let n_epochs = n / window;
    let n_ch = r.n_channels();
    let mut out = Vec::with_capacity(n_epochs);
    for k in 0..n_epochs {
        let start = k * window;
        let mut data = Mat::zeros(n_ch, window);
        for ch in 0..n_ch {
            data.row_mut(ch)
                .copy_from_slice(&r.data.row(ch)[start..start + window]);
        }
        out.push(Epoch {
            subject_id: r.subject_id.clone(),
            label: r.label,
            epoch_index: k,
            data,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn test_recording(n_ch: usize, n_samples: usize, fs: f64) -> Recording {
        let data: Vec<f32> = (0..n_ch * n_samples)
            .map(|i| (i as f32 * 0.37).sin())
            .collect();
        Recording {
            subject_id: "S01".into(),
            label: ClassLabel::Hc,
            sample_rate_hz: fs,
            channel_names: (0..n_ch).map(|i| format!("ch{i:02}")).collect(),
            data: Mat::from_vec(n_ch, n_samples, data),
        }
    }

    #[test]
    fn valid_recording_passes() {
        let r = test_recording(32, 1024, 512.0);
        assert!(validate_recording(&r).is_ok());
    }

    #[test]
    fn nan_sample_is_located() {
        let mut r = test_recording(32, 1024, 512.0);
        r.data.set(5, 100, f32::NAN);
        match validate_recording(&r) {
            Err(ModelError::NonFinite { channel, sample }) => {
                assert_eq!((channel, sample), (5, 100));
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn name_row_mismatch_is_rejected() {
        let mut r = test_recording(32, 64, 512.0);
        r.channel_names.pop();
        assert!(matches!(
            validate_recording(&r),
            Err(ModelError::ShapeMismatch { names: 31, rows: 32 })
        ));
    }

    #[test]
    fn nonpositive_rate_is_rejected() {
        let mut r = test_recording(4, 64, 512.0);
        r.sample_rate_hz = 0.0;
        assert!(matches!(
            validate_recording(&r),
            Err(ModelError::BadRate { .. })
        ));
    }

    #[test]
    fn two_hundred_seconds_gives_hundred_epochs() {
        let r = test_recording(32, 200 * 512, 512.0);
        let epochs = epoch_recording(&r, 2.0).unwrap();
        assert_eq!(epochs.len(), 100);
        for (k, e) in epochs.iter().enumerate() {
            assert_eq!(e.epoch_index, k);
            assert_eq!((e.data.rows(), e.data.cols()), (32, 1024));
        }
    }

    #[test]
    fn exactly_one_window() {
        let r = test_recording(4, 1024, 512.0);
        assert_eq!(epoch_recording(&r, 2.0).unwrap().len(), 1);
    }

    #[test]
    fn remainder_is_dropped() {
        // 5.5 s at 512 Hz with 2 s windows: 2 epochs, final 1.5 s discarded.
        let r = test_recording(4, (5.5 * 512.0) as usize, 512.0);
        assert_eq!(epoch_recording(&r, 2.0).unwrap().len(), 2);
    }

    #[test]
    fn too_short_recording_errors() {
        let r = test_recording(4, 100, 512.0);
        assert!(matches!(
            epoch_recording(&r, 2.0),
            Err(ModelError::EpochTooLong { .. })
        ));
    }

    proptest! {
        // Concatenating epoch data reproduces the first floor(n/L)*L samples
        // bit-exactly, and the count is invariant under trailing extras < L.
        #[test]
        fn epochs_tile_the_prefix(n_ch in 1usize..5, n_epochs in 1usize..6,
                                  window in 2usize..40, extra in 0usize..39) {
            let extra = extra.min(window - 1);
            let n = n_epochs * window + extra;
            let fs = window as f64; // epoch_seconds = 1.0 gives L = window
            let r = test_recording(n_ch, n, fs);
            let epochs = epoch_recording(&r, 1.0).unwrap();
            prop_assert_eq!(epochs.len(), n_epochs);
            for ch in 0..n_ch {
                let rebuilt: Vec<f32> = epochs
                    .iter()
                    .flat_map(|e| e.data.row(ch).to_vec())
                    .collect();
                prop_assert_eq!(&rebuilt[..], &r.data.row(ch)[..n_epochs * window]);
            }
        }
    }
}
