//! Leave-one-subject-out cross-validation: fold construction, the
//! subject-level prediction rule, the full harness, and report rendering.
//!
//! Report CSV layout: a header line, one row per subject with accuracies as
//! fractions in [0, 1], then an `average` row whose `correct` column holds
//! the fraction of correctly predicted subjects.

use rayon::prelude::*;

use thiserror::Error;

use crate::forge::{forge_epoch, ForgeConfig, ForgeError, ForgedImage};
use crate::ingest::{read_bdf, read_raw, IngestError};
use crate::model::{
    epoch_recording, validate_recording, ClassLabel, DatasetManifest, ModelError, Recording,
};
use crate::nn::{build_cnn_for_input, evaluate, predict, train, NnError, TrainConfig};
use crate::util::{derive_seed, derive_seed_indexed};

/// One cross-validation fold: a held-out subject and everyone else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test_subject_id: String,
    pub train_subject_ids: Vec<String>,
}

/// Outcome of the subject-level prediction rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectPrediction {
    pub predicted_label: ClassLabel,
    pub epoch_accuracy: f64,
    pub correct: bool,
}

/// One row of the final report.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub subject_id: String,
    pub label: ClassLabel,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub predicted_label: ClassLabel,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosocvReport {
    pub rows: Vec<FoldResult>,
    pub avg_train_loss: f64,
    pub avg_train_acc: f64,
    pub avg_test_loss: f64,
    pub avg_test_acc: f64,
    /// Fraction of folds whose subject was predicted correctly.
    pub subject_accuracy: f64,
}

impl LosocvReport {
    pub fn from_rows(rows: Vec<FoldResult>) -> Self {
        let n = rows.len() as f64;
        let mean = |f: &dyn Fn(&FoldResult) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        Self {
            avg_train_loss: mean(&|r| r.train_loss),
            avg_train_acc: mean(&|r| r.train_acc),
            avg_test_loss: mean(&|r| r.test_loss),
            avg_test_acc: mean(&|r| r.test_acc),
            subject_accuracy: rows.iter().filter(|r| r.correct).count() as f64 / n,
            rows,
        }
    }
}

#[derive(Debug, Error)]
pub enum LosocvError {
    #[error("need at least 2 subjects, got {n_subjects}")]
    TooFewSubjects { n_subjects: usize },
    #[error("all subjects share one class; both classes are required")]
    SingleClass,
    #[error("no epoch predictions to aggregate")]
    Empty,
    #[error("fold {subject_id}: {source}")]
    Fold {
        subject_id: String,
        #[source]
        source: Box<LosocvError>,
    },
    #[error("bad report: {reason}")]
    BadReport { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// One fold per subject, in manifest order.
pub fn make_folds(manifest: &DatasetManifest) -> Result<Vec<Fold>, LosocvError> {
    manifest.validate()?;
    let n = manifest.entries.len();
    if n < 2 {
        return Err(LosocvError::TooFewSubjects { n_subjects: n });
    }
    let classes: std::collections::HashSet<ClassLabel> =
        manifest.entries.iter().map(|e| e.label).collect();
    if classes.len() < 2 {
        return Err(LosocvError::SingleClass);
    }
    Ok(manifest
        .entries
        .iter()
        .map(|test| Fold {
            test_subject_id: test.subject_id.clone(),
            train_subject_ids: manifest
                .entries
                .iter()
                .filter(|e| e.subject_id != test.subject_id)
                .map(|e| e.subject_id.clone())
                .collect(),
        })
        .collect())
}

/// The subject rule on a known epoch accuracy: the subject is predicted as
/// its true class only when strictly more than half of its epochs are
/// labeled correctly; exactly half counts as a miss.
pub fn subject_prediction_from_accuracy(
    epoch_accuracy: f64,
    true_label: ClassLabel,
) -> SubjectPrediction {
    let correct = epoch_accuracy > 0.5;
    SubjectPrediction {
        predicted_label: if correct { true_label } else { true_label.other() },
        epoch_accuracy,
        correct,
    }
}

/// Aggregate per-epoch predictions for one subject.
pub fn subject_prediction(
    epoch_predictions: &[ClassLabel],
    true_label: ClassLabel,
) -> Result<SubjectPrediction, LosocvError> {
    if epoch_predictions.is_empty() {
        return Err(LosocvError::Empty);
    }
    let hits = epoch_predictions.iter().filter(|&&p| p == true_label).count();
    let accuracy = hits as f64 / epoch_predictions.len() as f64;
    Ok(subject_prediction_from_accuracy(accuracy, true_label))
}

/// Forge every epoch of every recording, in input order.
pub fn forge_recordings(
    recordings: &[Recording],
    epoch_seconds: f64,
    cfg: &ForgeConfig,
) -> Result<Vec<ForgedImage>, LosocvError> {
    let mut jobs = Vec::new();
    for r in recordings {
        validate_recording(r).map_err(|e| LosocvError::Fold {
            subject_id: r.subject_id.clone(),
            source: Box::new(e.into()),
        })?;
        for epoch in epoch_recording(r, epoch_seconds).map_err(|e| LosocvError::Fold {
            subject_id: r.subject_id.clone(),
            source: Box::new(e.into()),
        })? {
            jobs.push((epoch, r.sample_rate_hz));
        }
    }
    jobs.par_iter()
        .map(|(epoch, fs)| {
            forge_epoch(epoch, cfg, *fs).map_err(|e| LosocvError::Fold {
                subject_id: epoch.subject_id.clone(),
                source: Box::new(e.into()),
            })
        })
        .collect()
}

fn run_fold(
    fold: &Fold,
    label: ClassLabel,
    images: &[ForgedImage],
    forge_cfg: &ForgeConfig,
    train_cfg: &TrainConfig,
    base_seed: u64,
) -> Result<FoldResult, LosocvError> {
    let test_id = fold.test_subject_id.as_str();
    // Canonical (subject, epoch) order: fold results must not depend on the
    // order subjects arrived in.
    let key = |img: &ForgedImage| (img.provenance.subject_id.clone(), img.provenance.epoch_index);
    let mut train_set: Vec<(&ForgedImage, ClassLabel)> = images
        .iter()
        .filter(|img| img.provenance.subject_id != test_id)
        .map(|img| (img, img.provenance.label))
        .collect();
    train_set.sort_by_key(|(img, _)| key(img));
    let mut test_set: Vec<&ForgedImage> = images
        .iter()
        .filter(|img| img.provenance.subject_id == test_id)
        .collect();
    test_set.sort_by_key(|img| key(img));
    // Provenance-level leakage check; a violation is a harness bug.
    assert!(
        train_set.iter().all(|(img, _)| img.provenance.subject_id != test_id),
        "test subject leaked into training data"
    );
    if test_set.is_empty() {
        return Err(LosocvError::Empty);
    }

    let model_seed = derive_seed(base_seed, test_id);
    let mut model = build_cnn_for_input(3, forge_cfg.out_height, forge_cfg.out_width, model_seed)?;
    let fold_train_cfg = TrainConfig {
        seed: derive_seed_indexed(model_seed, 1),
        ..train_cfg.clone()
    };
    let history = train(&mut model, &train_set, &fold_train_cfg)?;

    let (test_loss, _) = evaluate(
        &model,
        &test_set.iter().map(|img| (*img, label)).collect::<Vec<_>>(),
    )?;
    let epoch_labels: Vec<ClassLabel> = predict(&model, &test_set)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    let subject = subject_prediction(&epoch_labels, label)?;

    Ok(FoldResult {
        subject_id: test_id.to_string(),
        label,
        train_loss: history.final_loss,
        train_acc: history.final_accuracy,
        test_loss,
        test_acc: subject.epoch_accuracy,
        predicted_label: subject.predicted_label,
        correct: subject.correct,
    })
}

/// Run the harness on recordings already in memory. Per-fold model and
/// shuffle seeds derive from `(base_seed, subject_id)`, so results do not
/// depend on subject order, and folds run in parallel.
pub fn run_losocv_recordings(
    recordings: &[Recording],
    epoch_seconds: f64,
    forge_cfg: &ForgeConfig,
    train_cfg: &TrainConfig,
    base_seed: u64,
) -> Result<LosocvReport, LosocvError> {
    let manifest = DatasetManifest {
        entries: recordings
            .iter()
            .map(|r| crate::model::ManifestEntry {
                subject_id: r.subject_id.clone(),
                label: r.label,
                path: Default::default(),
            })
            .collect(),
        epoch_seconds,
    };
    let folds = make_folds(&manifest)?;
    let images = forge_recordings(recordings, epoch_seconds, forge_cfg)?;

    let rows: Vec<FoldResult> = folds
        .par_iter()
        .zip(recordings.par_iter())
        .map(|(fold, recording)| {
            run_fold(fold, recording.label, &images, forge_cfg, train_cfg, base_seed).map_err(
                |e| LosocvError::Fold {
                    subject_id: fold.test_subject_id.clone(),
                    source: Box::new(e),
                },
            )
        })
        .collect::<Result<_, _>>()?;
    Ok(LosocvReport::from_rows(rows))
}

/// Load every manifest entry (`.bdf` by extension, raw tensor otherwise) and
/// run the harness.
pub fn run_losocv(
    manifest: &DatasetManifest,
    forge_cfg: &ForgeConfig,
    train_cfg: &TrainConfig,
    base_seed: u64,
) -> Result<LosocvReport, LosocvError> {
    manifest.validate()?;
    let recordings: Vec<Recording> = manifest
        .entries
        .iter()
        .map(|e| -> Result<Recording, LosocvError> {
            let is_bdf = e
                .path
                .extension()
                .map(|x| x.eq_ignore_ascii_case("bdf"))
                .unwrap_or(false);
            let r = if is_bdf {
                read_bdf(&e.path, &e.subject_id, e.label)
            } else {
                read_raw(&e.path, &e.subject_id, e.label)
            };
            r.map_err(|err| LosocvError::Fold {
                subject_id: e.subject_id.clone(),
                source: Box::new(err.into()),
            })
        })
        .collect::<Result<_, _>>()?;
    run_losocv_recordings(
        &recordings,
        manifest.epoch_seconds,
        forge_cfg,
        train_cfg,
        base_seed,
    )
}

/// Text table and CSV renderings of a report.
#[derive(Debug, Clone)]
pub struct RenderedReport {
    pub table: String,
    pub csv: String,
}

pub fn render_report(report: &LosocvReport) -> RenderedReport {
    let mut table = String::new();
    table.push_str(&format!(
        "{:<10} {:<5} {:>10} {:>13} {:>10} {:>12} {:>5} {:>8}\n",
        "subject", "label", "train_loss", "train_acc(%)", "test_loss", "test_acc(%)", "pred", "correct"
    ));
    for r in &report.rows {
        table.push_str(&format!(
            "{:<10} {:<5} {:>10.3} {:>13.2} {:>10.3} {:>12.2} {:>5} {:>8}\n",
            r.subject_id,
            r.label.to_string(),
            r.train_loss,
            100.0 * r.train_acc,
            r.test_loss,
            100.0 * r.test_acc,
            r.predicted_label.to_string(),
            r.correct
        ));
    }
    table.push_str(&format!(
        "{:<10} {:<5} {:>10.3} {:>13.2} {:>10.3} {:>12.2} {:>5} {:>7.2}%\n",
        "average",
        "-",
        report.avg_train_loss,
        100.0 * report.avg_train_acc,
        report.avg_test_loss,
        100.0 * report.avg_test_acc,
        "-",
        100.0 * report.subject_accuracy
    ));

    let mut csv = String::from("subject_id,label,train_loss,train_acc,test_loss,test_acc,pred,correct\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.subject_id,
            r.label,
            r.train_loss,
            r.train_acc,
            r.test_loss,
            r.test_acc,
            r.predicted_label,
            r.correct
        ));
    }
    csv.push_str(&format!(
        "average,-,{},{},{},{},-,{}\n",
        report.avg_train_loss,
        report.avg_train_acc,
        report.avg_test_loss,
        report.avg_test_acc,
        report.subject_accuracy
    ));
    RenderedReport { table, csv }
}

/// Rebuild a report from its CSV rendering. The average row must agree with
/// the averages recomputed from the rows.
pub fn parse_report_csv(text: &str) -> Result<LosocvReport, LosocvError> {
    let bad = |reason: String| LosocvError::BadReport { reason };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty report".into()))?;
    if header != "subject_id,label,train_loss,train_acc,test_loss,test_acc,pred,correct" {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    let mut stated_average: Option<[f64; 5]> = None;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(bad(format!("malformed row {line:?}")));
        }
        let num = |s: &str| -> Result<f64, LosocvError> {
            s.parse().map_err(|_| bad(format!("bad number {s:?}")))
        };
        if cols[0] == "average" {
            stated_average = Some([num(cols[2])?, num(cols[3])?, num(cols[4])?, num(cols[5])?, num(cols[7])?]);
            continue;
        }
        rows.push(FoldResult {
            subject_id: cols[0].to_string(),
            label: ClassLabel::parse(cols[1]).ok_or_else(|| bad(format!("bad label {:?}", cols[1])))?,
            train_loss: num(cols[2])?,
            train_acc: num(cols[3])?,
            test_loss: num(cols[4])?,
            test_acc: num(cols[5])?,
            predicted_label: ClassLabel::parse(cols[6])
                .ok_or_else(|| bad(format!("bad prediction {:?}", cols[6])))?,
            correct: match cols[7] {
                "true" => true,
                "false" => false,
                other => return Err(bad(format!("bad correct flag {other:?}"))),
            },
        });
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let report = LosocvReport::from_rows(rows);
    if let Some([tl, ta, sl, sa, subj]) = stated_average {
        let matches = tl == report.avg_train_loss
            && ta == report.avg_train_acc
            && sl == report.avg_test_loss
            && sa == report.avg_test_acc
            && subj == report.subject_accuracy;
        if !matches {
            return Err(bad("average row disagrees with recomputed averages".into()));
        }
    } else {
        return Err(bad("missing average row".into()));
    }
    Ok(report)
}
