//! Minibatch training loop, full-pass evaluation, and prediction.
//!
//! Batches are processed in fixed-size chunks: chunks run in parallel, each
//! chunk reduces its items in index order, and chunk partials are summed in
//! chunk order. Chunk boundaries depend only on the batch, so results are
//! bit-identical for any worker count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::forge::ForgedImage;
use crate::model::ClassLabel;
use crate::nn::adam::{adam_step, AdamHyper, AdamState};
use crate::nn::layers::softmax;
use crate::nn::loss::softmax_ce_sum;
use crate::nn::model::{CnnModel, ParamGrad};
use crate::nn::tensor::Tensor4;
use crate::nn::NnError;

/// Fixed reduction-chunk size; part of the determinism contract, not a
/// tuning knob.
const CHUNK: usize = 8;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_coeff: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 30,
            batch_size: 150,
            l2_coeff: 0.01,
            seed: 0,
        }
    }
}

/// Loss/accuracy measured while the parameters were still moving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub running_accuracy: f64,
}

/// Per-epoch running stats plus a post-training full pass over the training
/// set. Reported losses are the data term only; L2 acts through gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub per_epoch: Vec<EpochStats>,
    pub final_loss: f64,
    pub final_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    pub probabilities: [f32; 2],
}

/// Stack images into a (n, 3, h, w) batch tensor.
pub fn images_to_tensor(images: &[&ForgedImage]) -> Result<Tensor4<f32>, NnError> {
    let first = images.first().ok_or(NnError::EmptyDataset)?;
    let (h, w) = (first.height, first.width);
    let mut data = Vec::with_capacity(images.len() * 3 * h * w);
    for img in images {
        if img.height != h || img.width != w {
            return Err(NnError::ShapeMismatch {
                context: format!(
                    "image dims {}x{} differ from {}x{}",
                    img.height, img.width, h, w
                ),
            });
        }
        data.extend_from_slice(&img.planes);
    }
    Ok(Tensor4::from_vec(images.len(), 3, h, w, data))
}

struct ChunkOutcome {
    grads: Vec<ParamGrad<f32>>,
    loss_sum: f64,
    n_correct: usize,
}

/// Forward + backward over one chunk, sum-form (no batch scaling).
fn chunk_pass(
    model: &CnnModel<f32>,
    items: &[(&ForgedImage, ClassLabel)],
) -> Result<ChunkOutcome, NnError> {
    let images: Vec<&ForgedImage> = items.iter().map(|(img, _)| *img).collect();
    let labels: Vec<ClassLabel> = items.iter().map(|(_, l)| *l).collect();
    let x = images_to_tensor(&images)?;
    let (logits, caches) = model.forward_logits(x)?;
    let n_correct = count_correct(&logits, &labels);
    let (loss_sum, grad) = softmax_ce_sum(&logits, &labels)?;
    let grads = model.backward(grad, caches)?;
    Ok(ChunkOutcome {
        grads,
        loss_sum: loss_sum as f64,
        n_correct,
    })
}

fn count_correct(logits: &Tensor4<f32>, labels: &[ClassLabel]) -> usize {
    labels
        .iter()
        .enumerate()
        .filter(|(n, label)| {
            let predicted = if logits.get(*n, 1, 0, 0) > logits.get(*n, 0, 0, 0) {
                ClassLabel::Pd
            } else {
                ClassLabel::Hc
            };
            predicted == **label
        })
        .count()
}

/// Train in place. Deterministic for a given seed and dataset order,
/// independent of the rayon worker count.
pub fn train(
    model: &mut CnnModel<f32>,
    data: &[(&ForgedImage, ClassLabel)],
    cfg: &TrainConfig,
) -> Result<TrainHistory, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hp = AdamHyper::with_lr(cfg.lr as f32);
    let l2 = cfg.l2_coeff as f32;
    let mut states: Vec<(AdamState<f32>, AdamState<f32>)> = model
        .params()
        .iter()
        .map(|(w, b)| (AdamState::new(w.len()), AdamState::new(b.len())))
        .collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut per_epoch = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let items: Vec<(&ForgedImage, ClassLabel)> =
                batch.iter().map(|&i| data[i]).collect();
            let outcomes: Vec<ChunkOutcome> = items
                .par_chunks(CHUNK)
                .map(|chunk| chunk_pass(model, chunk))
                .collect::<Result<_, _>>()?;

            let mut grads: Option<Vec<ParamGrad<f32>>> = None;
            for outcome in outcomes {
                loss_sum += outcome.loss_sum;
                correct += outcome.n_correct;
                match grads.as_mut() {
                    None => grads = Some(outcome.grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&outcome.grads) {
                            a.add_assign(g);
                        }
                    }
                }
            }
            let mut grads = grads.expect("batch is never empty");
            let scale = 1.0 / batch.len() as f32;
            for g in grads.iter_mut() {
                g.scale(scale);
            }
            for ((param, state), grad) in
                model.params_mut().into_iter().zip(states.iter_mut()).zip(&grads)
            {
                adam_step(param.0, &grad.weight, &mut state.0, &hp, l2)?;
                adam_step(param.1, &grad.bias, &mut state.1, &hp, 0.0)?;
            }
        }
        per_epoch.push(EpochStats {
            mean_loss: loss_sum / data.len() as f64,
            running_accuracy: correct as f64 / data.len() as f64,
        });
    }

    let (final_loss, final_accuracy) = evaluate(model, data)?;
    Ok(TrainHistory {
        per_epoch,
        final_loss,
        final_accuracy,
    })
}

/// Full-pass mean loss and accuracy on a frozen model.
pub fn evaluate(
    model: &CnnModel<f32>,
    data: &[(&ForgedImage, ClassLabel)],
) -> Result<(f64, f64), NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let outcomes: Vec<(f64, usize)> = data
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<(f64, usize), NnError> {
            let images: Vec<&ForgedImage> = chunk.iter().map(|(img, _)| *img).collect();
            let labels: Vec<ClassLabel> = chunk.iter().map(|(_, l)| *l).collect();
            let (logits, _) = model.forward_logits(images_to_tensor(&images)?)?;
            let (loss_sum, _) = softmax_ce_sum(&logits, &labels)?;
            Ok((loss_sum as f64, count_correct(&logits, &labels)))
        })
        .collect::<Result<_, _>>()?;
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for (l, c) in outcomes {
        loss_sum += l;
        correct += c;
    }
    Ok((loss_sum / data.len() as f64, correct as f64 / data.len() as f64))
}

/// Class and probabilities per image; probabilities sum to one.
pub fn predict(
    model: &CnnModel<f32>,
    images: &[&ForgedImage],
) -> Result<Vec<Prediction>, NnError> {
    let outcomes: Vec<Vec<Prediction>> = images
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<Vec<Prediction>, NnError> {
            let (logits, _) = model.forward_logits(images_to_tensor(chunk)?)?;
            let probs = softmax(&logits);
            Ok((0..chunk.len())
                .map(|n| {
                    let p0 = probs.get(n, 0, 0, 0);
                    let p1 = probs.get(n, 1, 0, 0);
                    Prediction {
                        label: if p1 > p0 { ClassLabel::Pd } else { ClassLabel::Hc },
                        probabilities: [p0, p1],
                    }
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    Ok(outcomes.into_iter().flatten().collect())
}
