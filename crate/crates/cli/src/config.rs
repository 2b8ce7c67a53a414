//! Run configuration and the two line-oriented text formats: the config
//! file (`section.key = value`) and the dataset manifest.
//!
//! Config file: one `key = value` per line, `#` comments, unknown keys are
//! errors. Manifest: `epoch_seconds = <v>` settings lines plus
//! `subject_id,label,path` entries; paths resolve relative to the manifest.

use std::path::{Path, PathBuf};

use forged_eeg_core::forge::{ForgeConfig, Normalization};
use forged_eeg_core::model::{ClassLabel, DatasetManifest, ManifestEntry};
use forged_eeg_core::nn::TrainConfig;
use forged_eeg_core::preprocess::RejectionPolicy;
use forged_eeg_core::tfr::{SpwvdConfig, WindowKind};

use crate::AppError;

#[derive(Debug, Clone)]
pub struct AppConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub threads: usize,

    pub low_hz: f64,
    pub high_hz: f64,
    pub ica: bool,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
    pub policy: RejectionPolicy,

    pub epoch_seconds: f64,
    pub n_freq_bins: usize,
    pub time_window_len: usize,
    pub lag_window_len: usize,
    pub out_height: usize,
    pub out_width: usize,
    pub normalization: Normalization,

    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_coeff: f64,

    pub base_seed: u64,

    pub subjects_per_class: usize,
    pub duration_s: f64,
    pub n_channels: usize,
    pub sample_rate_hz: f64,
    pub noise_sigma: f64,
    pub class_a_hz: f64,
    pub class_b_hz: f64,
    pub peak_bandwidth_hz: f64,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            threads: 0,
            low_hz: 0.5,
            high_hz: 50.0,
            ica: false,
            ica_max_iter: 500,
            ica_tol: 1e-6,
            policy: RejectionPolicy::KeepAll,
            epoch_seconds: 2.0,
            n_freq_bins: 2048,
            time_window_len: 31,
            lag_window_len: 255,
            out_height: 256,
            out_width: 256,
            normalization: Normalization::JointMinMax,
            lr: 1e-4,
            epochs: 30,
            batch_size: 150,
            l2_coeff: 0.01,
            base_seed: 42,
            subjects_per_class: 8,
            duration_s: 60.0,
            n_channels: 32,
            sample_rate_hz: 512.0,
            noise_sigma: 0.2,
            class_a_hz: 8.0,
            class_b_hz: 20.0,
            peak_bandwidth_hz: 0.5,
        }
    }
}

impl AppConfig {
    pub fn forge_config(&self) -> ForgeConfig {
        ForgeConfig {
            spwvd: SpwvdConfig {
                n_freq_bins: self.n_freq_bins,
                time_window: (WindowKind::Hamming, self.time_window_len),
                lag_window: (WindowKind::Hamming, self.lag_window_len),
            },
            out_height: self.out_height,
            out_width: self.out_width,
            normalization: self.normalization,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2_coeff: self.l2_coeff,
            seed: self.base_seed,
        }
    }

    /// Load `key = value` lines over the current values.
    pub fn load_file(&mut self, path: &Path) -> Result<(), AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Config {
            reason: format!("{path:?}: {e}"),
        })?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| AppError::Config {
                reason: format!("{path:?}:{}: expected key = value", lineno + 1),
            })?;
            self.apply_kv(key.trim(), value.trim()).map_err(|e| AppError::Config {
                reason: format!("{path:?}:{}: {e}", lineno + 1),
            })?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), AppError> {
        let bad = |what: &str| AppError::Config {
            reason: format!("bad value {value:?} for {what}"),
        };
        macro_rules! parse {
            ($field:expr) => {
                $field = value.parse().map_err(|_| bad(key))?
            };
        }
        match key {
            "paths.data_dir" => self.data_dir = PathBuf::from(value),
            "paths.out_dir" => self.out_dir = PathBuf::from(value),
            "threads" => parse!(self.threads),
            "preprocess.low_hz" => parse!(self.low_hz),
            "preprocess.high_hz" => parse!(self.high_hz),
            "preprocess.ica" => parse!(self.ica),
            "preprocess.ica_max_iter" => parse!(self.ica_max_iter),
            "preprocess.ica_tol" => parse!(self.ica_tol),
            "preprocess.policy" => self.policy = parse_policy(value).ok_or_else(|| bad(key))?,
            "forge.epoch_seconds" => parse!(self.epoch_seconds),
            "forge.n_freq_bins" => parse!(self.n_freq_bins),
            "forge.time_window_len" => parse!(self.time_window_len),
            "forge.lag_window_len" => parse!(self.lag_window_len),
            "forge.out_height" => parse!(self.out_height),
            "forge.out_width" => parse!(self.out_width),
            "forge.normalization" => {
                self.normalization = parse_normalization(value).ok_or_else(|| bad(key))?
            }
            "train.lr" => parse!(self.lr),
            "train.epochs" => parse!(self.epochs),
            "train.batch_size" => parse!(self.batch_size),
            "train.l2_coeff" => parse!(self.l2_coeff),
            "losocv.base_seed" => parse!(self.base_seed),
            "synth.subjects_per_class" => parse!(self.subjects_per_class),
            "synth.duration_s" => parse!(self.duration_s),
            "synth.n_channels" => parse!(self.n_channels),
            "synth.sample_rate_hz" => parse!(self.sample_rate_hz),
            "synth.noise_sigma" => parse!(self.noise_sigma),
            "synth.class_a_hz" => parse!(self.class_a_hz),
            "synth.class_b_hz" => parse!(self.class_b_hz),
            "synth.peak_bandwidth_hz" => parse!(self.peak_bandwidth_hz),
            other => {
                return Err(AppError::Config {
                    reason: format!("unknown key {other:?}"),
                })
            }
        }
        Ok(())
    }
}

pub fn parse_policy(s: &str) -> Option<RejectionPolicy> {
    if s.eq_ignore_ascii_case("keepall") {
        return Some(RejectionPolicy::KeepAll);
    }
    if let Some(thr) = s.strip_prefix("kurtosis:") {
        return thr.parse().ok().map(RejectionPolicy::KurtosisThreshold);
    }
    if let Some(list) = s.strip_prefix("reject:") {
        let indices: Option<Vec<usize>> =
            list.split(',').map(|p| p.trim().parse().ok()).collect();
        return indices.map(RejectionPolicy::ExplicitList);
    }
    None
}

pub fn parse_normalization(s: &str) -> Option<Normalization> {
    match s.to_ascii_lowercase().as_str() {
        "joint" => Some(Normalization::JointMinMax),
        "perplane" => Some(Normalization::PerPlaneMinMax),
        _ => None,
    }
}

/// Read a manifest file; entry paths resolve relative to the manifest's
/// directory. `default_epoch_seconds` applies when the file has no
/// `epoch_seconds` line.
pub fn read_manifest(path: &Path, default_epoch_seconds: f64) -> Result<DatasetManifest, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Config {
        reason: format!("{path:?}: {e}"),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    let mut epoch_seconds = default_epoch_seconds;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            if key.trim() == "epoch_seconds" {
                epoch_seconds = value.trim().parse().map_err(|_| AppError::Config {
                    reason: format!("{path:?}:{}: bad epoch_seconds", lineno + 1),
                })?;
                continue;
            }
            return Err(AppError::Config {
                reason: format!("{path:?}:{}: unknown setting {key:?}", lineno + 1),
            });
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(AppError::Config {
                reason: format!("{path:?}:{}: expected subject_id,label,path", lineno + 1),
            });
        }
        let label = ClassLabel::parse(cols[1]).ok_or_else(|| AppError::Config {
            reason: format!("{path:?}:{}: unknown label {:?}", lineno + 1, cols[1]),
        })?;
        entries.push(ManifestEntry {
            subject_id: cols[0].to_string(),
            label,
            path: base.join(cols[2]),
        });
    }
    let mut manifest = DatasetManifest::new(entries);
    manifest.epoch_seconds = epoch_seconds;
    Ok(manifest)
}

/// Write a manifest with paths stored relative to `dir`.
pub fn write_manifest(
    dir: &Path,
    manifest: &DatasetManifest,
    file_name: &str,
) -> Result<PathBuf, AppError> {
    let mut text = String::from("# dataset manifest: subject_id,label,path\n");
    text.push_str(&format!("epoch_seconds = {}\n", manifest.epoch_seconds));
    for e in &manifest.entries {
        let rel = e.path.strip_prefix(dir).unwrap_or(&e.path);
        text.push_str(&format!("{},{},{}\n", e.subject_id, e.label, rel.display()));
    }
    let path = dir.join(file_name);
    std::fs::write(&path, text).map_err(|e| AppError::Config {
        reason: format!("{path:?}: {e}"),
    })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_overrides_apply() {
        let mut cfg = AppConfig::default();
        cfg.apply_kv("forge.out_height", "64").unwrap();
        cfg.apply_kv("train.lr", "0.001").unwrap();
        cfg.apply_kv("preprocess.policy", "kurtosis:5.0").unwrap();
        assert_eq!(cfg.out_height, 64);
        assert_eq!(cfg.lr, 0.001);
        assert_eq!(cfg.policy, RejectionPolicy::KurtosisThreshold(5.0));
        assert!(cfg.apply_kv("frobnicate.zap", "1").is_err());
        assert!(cfg.apply_kv("train.lr", "fast").is_err());
    }

    #[test]
    fn policy_forms_parse() {
        assert_eq!(parse_policy("keepall"), Some(RejectionPolicy::KeepAll));
        assert_eq!(
            parse_policy("reject:0,3"),
            Some(RejectionPolicy::ExplicitList(vec![0, 3]))
        );
        assert!(parse_policy("zap").is_none());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = DatasetManifest {
            entries: vec![
                ManifestEntry {
                    subject_id: "HC01".into(),
                    label: ClassLabel::Hc,
                    path: dir.path().join("recordings/HC01.ft"),
                },
                ManifestEntry {
                    subject_id: "PD01".into(),
                    label: ClassLabel::Pd,
                    path: dir.path().join("recordings/PD01.ft"),
                },
            ],
            epoch_seconds: 2.0,
        };
        let path = write_manifest(dir.path(), &manifest, "manifest.txt").unwrap();
        let back = read_manifest(&path, 1.0).unwrap();
        assert_eq!(back.epoch_seconds, 2.0);
        assert_eq!(back.entries.len(), 2);
        assert_eq!(back.entries[0].subject_id, "HC01");
        assert_eq!(back.entries[0].path, dir.path().join("recordings/HC01.ft"));
        assert_eq!(back.entries[1].label, ClassLabel::Pd);
    }

    #[test]
    fn malformed_manifest_lines_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        std::fs::write(&path, "S01,HC\n").unwrap();
        assert!(read_manifest(&path, 2.0).is_err());
        std::fs::write(&path, "S01,XX,foo.ft\n").unwrap();
        assert!(read_manifest(&path, 2.0).is_err());
    }
}
