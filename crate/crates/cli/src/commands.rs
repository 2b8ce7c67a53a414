//! Command implementations. Every command writes only under its output
//! directory and records the seed it used in a sidecar metadata file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use forged_eeg_core::forge::{
    export_ppm, load_forged_dataset, save_forged_dataset, ForgedImage, Provenance,
};
use forged_eeg_core::ingest::{
    read_bdf, read_raw, synth_recording, write_raw, SpectralPeak, SynthSpec,
};
use forged_eeg_core::losocv::{
    forge_recordings, render_report, run_losocv, subject_prediction,
};
use forged_eeg_core::model::{ClassLabel, DatasetManifest, ManifestEntry, Recording};
use forged_eeg_core::nn::{build_cnn_for_input, evaluate, predict, train};
use forged_eeg_core::preprocess::{
    apply_zero_phase, design_bandpass, fastica, reject_and_rebuild, PreprocessError,
};
use forged_eeg_core::tfr::spwvd;
use forged_eeg_core::util::derive_seed;

use crate::args::Command;
use crate::config::{read_manifest, write_manifest, AppConfig};

pub fn run_command(command: &Command, cfg: &AppConfig) -> Result<()> {
    match command {
        Command::Synth { out_dir } => synth(out_dir, cfg),
        Command::Ingest { input, out_dir } => ingest(input, out_dir),
        Command::Preprocess { manifest, out_dir } => preprocess(manifest, out_dir, cfg),
        Command::Forge { manifest, out_dir } => forge(manifest, out_dir, cfg),
        Command::Train { images, out, holdout } => train_cmd(images, out, holdout.as_deref(), cfg),
        Command::Losocv { manifest, out_dir } => losocv(manifest, out_dir, cfg),
        Command::TfrPlot { input, channel, output } => tfr_plot(input, *channel, output, cfg),
    }
}

fn write_sidecar(dir: &Path, command: &str, seed: u64) -> Result<()> {
    std::fs::write(
        dir.join("run_meta.txt"),
        format!("command = {command}\nseed = {seed}\n"),
    )
    .with_context(|| format!("writing sidecar in {dir:?}"))?;
    Ok(())
}

fn load_recording(path: &Path, subject_id: &str, label: ClassLabel) -> Result<Recording> {
    let is_bdf = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("bdf"))
        .unwrap_or(false);
    let r = if is_bdf {
        read_bdf(path, subject_id, label)
    } else {
        read_raw(path, subject_id, label)
    };
    r.with_context(|| format!("reading recording {path:?}"))
}

fn load_manifest_recordings(manifest: &DatasetManifest) -> Result<Vec<Recording>> {
    manifest
        .entries
        .iter()
        .map(|e| load_recording(&e.path, &e.subject_id, e.label))
        .collect()
}

fn guard_output_dir(out_dir: &Path, input: &Path) -> Result<()> {
    let canon = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
    let input_dir = if input.is_dir() {
        input.to_path_buf()
    } else {
        input.parent().unwrap_or(Path::new(".")).to_path_buf()
    };
    if canon(out_dir) == canon(&input_dir) {
        bail!("output directory {out_dir:?} equals the input directory; commands never modify their inputs");
    }
    Ok(())
}

fn synth(out_dir: &Path, cfg: &AppConfig) -> Result<()> {
    let rec_dir = out_dir.join("recordings");
    std::fs::create_dir_all(&rec_dir).with_context(|| format!("creating {rec_dir:?}"))?;
    let mut entries = Vec::new();
    for class in 0..2usize {
        let (prefix, label, center_hz) = if class == 0 {
            ("HC", ClassLabel::Hc, cfg.class_a_hz)
        } else {
            ("PD", ClassLabel::Pd, cfg.class_b_hz)
        };
        for i in 0..cfg.subjects_per_class {
            let subject_id = format!("{prefix}{:02}", i + 1);
            let spec = SynthSpec {
                peaks: vec![SpectralPeak {
                    center_hz,
                    bandwidth_hz: cfg.peak_bandwidth_hz,
                    amplitude: 1.0,
                }],
                noise_sigma: cfg.noise_sigma,
                duration_s: cfg.duration_s,
                n_channels: cfg.n_channels,
                sample_rate_hz: cfg.sample_rate_hz,
                seed: derive_seed(cfg.base_seed, &subject_id),
            };
            let recording = synth_recording(&spec, &subject_id, label)
                .with_context(|| format!("synthesizing {subject_id}"))?;
            let path = rec_dir.join(format!("{subject_id}.ft"));
            write_raw(&recording, &path).with_context(|| format!("writing {path:?}"))?;
            entries.push(ManifestEntry {
                subject_id,
                label,
                path,
            });
        }
    }
    let mut manifest = DatasetManifest::new(entries);
    manifest.epoch_seconds = cfg.epoch_seconds;
    let manifest_path = write_manifest(out_dir, &manifest, "manifest.txt")?;
    write_sidecar(out_dir, "synth", cfg.base_seed)?;
    println!(
        "wrote {} subjects ({} per class) and {}",
        manifest.entries.len(),
        cfg.subjects_per_class,
        manifest_path.display()
    );
    Ok(())
}

fn ingest(input: &Path, out_dir: &Path) -> Result<()> {
    guard_output_dir(out_dir, input)?;
    let files: Vec<PathBuf> = if input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(input)
            .with_context(|| format!("listing {input:?}"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .map(|e| e.eq_ignore_ascii_case("bdf"))
                    .unwrap_or(false)
            })
            .collect();
        v.sort();
        v
    } else if input.exists() {
        vec![input.to_path_buf()]
    } else {
        bail!("input {input:?} does not exist");
    };
    if files.is_empty() {
        bail!("no .bdf files under {input:?}");
    }
    std::fs::create_dir_all(out_dir)?;
    let mut template = String::from(
        "# edit labels (HC|PD) before use; syntax: subject_id,label,path\nepoch_seconds = 2\n",
    );
    for path in &files {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "recording".into());
        let recording = load_recording(path, &stem, ClassLabel::Hc)?;
        let out = out_dir.join(format!("{stem}.ft"));
        write_raw(&recording, &out).with_context(|| format!("writing {out:?}"))?;
        template.push_str(&format!("{stem},HC,{stem}.ft\n"));
        println!(
            "{} -> {} ({} ch, {:.1} s @ {} Hz)",
            path.display(),
            out.display(),
            recording.n_channels(),
            recording.duration_s(),
            recording.sample_rate_hz
        );
    }
    std::fs::write(out_dir.join("manifest.template.txt"), template)?;
    Ok(())
}

fn preprocess(manifest_path: &Path, out_dir: &Path, cfg: &AppConfig) -> Result<()> {
    let manifest = read_manifest(manifest_path, cfg.epoch_seconds)?;
    guard_output_dir(out_dir, manifest_path)?;
    let rec_dir = out_dir.join("recordings");
    std::fs::create_dir_all(&rec_dir)?;
    let mut out_entries = Vec::new();
    for entry in &manifest.entries {
        let recording = load_recording(&entry.path, &entry.subject_id, entry.label)?;
        let kernel = design_bandpass(recording.sample_rate_hz, cfg.low_hz, cfg.high_hz)
            .with_context(|| format!("designing filter for {}", entry.subject_id))?;
        let mut cleaned = apply_zero_phase(&recording, &kernel)
            .with_context(|| format!("filtering {}", entry.subject_id))?;
        if cfg.ica {
            let seed = derive_seed(cfg.base_seed, &entry.subject_id);
            let decomposition =
                match fastica(&cleaned, cfg.ica_max_iter, cfg.ica_tol, seed) {
                    Ok(d) => d,
                    Err(PreprocessError::NoConvergence { partial }) => {
                        log::warn!(
                            "ICA did not reach tolerance for {}; using the partial result",
                            entry.subject_id
                        );
                        *partial
                    }
                    Err(e) => {
                        return Err(e)
                            .with_context(|| format!("ICA on {}", entry.subject_id))
                    }
                };
            cleaned = reject_and_rebuild(&decomposition, &cfg.policy)
                .with_context(|| format!("rebuilding {}", entry.subject_id))?;
        }
        let path = rec_dir.join(format!("{}.ft", entry.subject_id));
        write_raw(&cleaned, &path).with_context(|| format!("writing {path:?}"))?;
        out_entries.push(ManifestEntry {
            subject_id: entry.subject_id.clone(),
            label: entry.label,
            path,
        });
        println!("cleaned {}", entry.subject_id);
    }
    let mut out_manifest = DatasetManifest::new(out_entries);
    out_manifest.epoch_seconds = manifest.epoch_seconds;
    write_manifest(out_dir, &out_manifest, "manifest.txt")?;
    write_sidecar(out_dir, "preprocess", cfg.base_seed)?;
    Ok(())
}

fn forge(manifest_path: &Path, out_dir: &Path, cfg: &AppConfig) -> Result<()> {
    let manifest = read_manifest(manifest_path, cfg.epoch_seconds)?;
    guard_output_dir(out_dir, manifest_path)?;
    let recordings = load_manifest_recordings(&manifest)?;
    let images = forge_recordings(&recordings, manifest.epoch_seconds, &cfg.forge_config())
        .context("forging images")?;
    let image_dir = out_dir.join("images");
    save_forged_dataset(&image_dir, &images).context("saving image dataset")?;
    std::fs::create_dir_all(out_dir)?;
    write_sidecar(out_dir, "forge", cfg.base_seed)?;
    println!(
        "forged {} images ({}x{}) into {}",
        images.len(),
        cfg.out_height,
        cfg.out_width,
        image_dir.display()
    );
    Ok(())
}

fn train_cmd(images_dir: &Path, out: &Path, holdout: Option<&str>, cfg: &AppConfig) -> Result<()> {
    let images = load_forged_dataset(images_dir)
        .with_context(|| format!("loading image dataset from {images_dir:?}"))?;
    if images.is_empty() {
        bail!("no images in {images_dir:?}");
    }
    let (h, w) = (images[0].height, images[0].width);
    let train_set: Vec<(&ForgedImage, ClassLabel)> = images
        .iter()
        .filter(|img| Some(img.provenance.subject_id.as_str()) != holdout)
        .map(|img| (img, img.provenance.label))
        .collect();
    if train_set.is_empty() {
        bail!("holdout leaves no training data");
    }

    let seed = derive_seed(cfg.base_seed, "train");
    let mut model = build_cnn_for_input(3, h, w, seed).context("building model")?;
    println!("{}", model.summary(h, w));
    let history = train(&mut model, &train_set, &cfg.train_config()).context("training")?;
    for (i, e) in history.per_epoch.iter().enumerate() {
        println!(
            "epoch {:>3}: loss {:.4}  running acc {:.2}%",
            i + 1,
            e.mean_loss,
            100.0 * e.running_accuracy
        );
    }
    println!(
        "full-pass training loss {:.4}, accuracy {:.2}%",
        history.final_loss,
        100.0 * history.final_accuracy
    );

    if let Some(subject) = holdout {
        let held: Vec<&ForgedImage> = images
            .iter()
            .filter(|img| img.provenance.subject_id == subject)
            .collect();
        if held.is_empty() {
            bail!("holdout subject {subject:?} has no images");
        }
        let label = held[0].provenance.label;
        let (loss, _) = evaluate(
            &model,
            &held.iter().map(|img| (*img, label)).collect::<Vec<_>>(),
        )?;
        let epoch_labels: Vec<ClassLabel> =
            predict(&model, &held)?.into_iter().map(|p| p.label).collect();
        let s = subject_prediction(&epoch_labels, label)?;
        println!(
            "holdout {subject}: loss {loss:.4}, epoch acc {:.2}%, predicted {} ({})",
            100.0 * s.epoch_accuracy,
            s.predicted_label,
            if s.correct { "correct" } else { "wrong" }
        );
    }

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    model.save(out).with_context(|| format!("saving checkpoint {out:?}"))?;
    std::fs::write(
        out.with_extension("ckpt.meta"),
        format!("command = train\nseed = {}\n", cfg.base_seed),
    )?;
    println!("checkpoint written to {}", out.display());
    Ok(())
}

fn losocv(manifest_path: &Path, out_dir: &Path, cfg: &AppConfig) -> Result<()> {
    let manifest = read_manifest(manifest_path, cfg.epoch_seconds)?;
    std::fs::create_dir_all(out_dir)?;
    let report = run_losocv(
        &manifest,
        &cfg.forge_config(),
        &cfg.train_config(),
        cfg.base_seed,
    )
    .context("cross-validation run")?;
    let rendered = render_report(&report);
    print!("{}", rendered.table);
    println!(
        "subject-level accuracy: {:.2}% ({}/{} correct)",
        100.0 * report.subject_accuracy,
        report.rows.iter().filter(|r| r.correct).count(),
        report.rows.len()
    );
    let csv_path = out_dir.join("losocv_report.csv");
    std::fs::write(&csv_path, rendered.csv).with_context(|| format!("writing {csv_path:?}"))?;
    write_sidecar(out_dir, "losocv", cfg.base_seed)?;
    println!("report written to {}", csv_path.display());
    Ok(())
}

fn tfr_plot(input: &Path, channel: usize, output: &Path, cfg: &AppConfig) -> Result<()> {
    let recording = load_recording(input, "plot", ClassLabel::Hc)?;
    if channel >= recording.n_channels() {
        bail!(
            "channel {channel} out of range; recording has {} channels",
            recording.n_channels()
        );
    }
    let window = (cfg.epoch_seconds * recording.sample_rate_hz).round() as usize;
    let n = recording.n_samples().min(window.max(2));
    let signal: Vec<f64> = recording.data.row(channel)[..n]
        .iter()
        .map(|&v| v as f64)
        .collect();
    let tfr = spwvd(&signal, &cfg.forge_config().spwvd, recording.sample_rate_hz)
        .context("computing the time-frequency distribution")?;

    // Grayscale: min-max scale and replicate across the three planes.
    let (rows, cols) = (tfr.values.rows(), tfr.values.cols());
    let (lo, hi) = tfr
        .values
        .as_slice()
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
    let plane: Vec<f32> = tfr
        .values
        .as_slice()
        .iter()
        .map(|&v| ((v - lo) * scale) as f32)
        .collect();
    let mut planes = Vec::with_capacity(3 * plane.len());
    for _ in 0..3 {
        planes.extend_from_slice(&plane);
    }
    let image = ForgedImage {
        height: rows,
        width: cols,
        planes,
        provenance: Provenance {
            subject_id: "plot".into(),
            label: ClassLabel::Hc,
            epoch_index: 0,
        },
    };
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    export_ppm(&image, output).with_context(|| format!("writing {output:?}"))?;
    println!(
        "wrote {}x{} plot of channel {channel} to {}",
        cols,
        rows,
        output.display()
    );
    Ok(())
}
