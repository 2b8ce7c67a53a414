//! Softmax cross-entropy, fused for numerical stability.

use crate::model::ClassLabel;
use crate::nn::tensor::{Scalar, Tensor4};
use crate::nn::NnError;

/// Sum-form loss and gradient: total loss over the batch and
/// `grad = softmax - onehot` per item (no 1/n scaling). The training loop
/// accumulates these across fixed chunks and scales once.
pub(crate) fn softmax_ce_sum<T: Scalar>(
    logits: &Tensor4<T>,
    labels: &[ClassLabel],
) -> Result<(T, Tensor4<T>), NnError> {
    if logits.n != labels.len() || logits.h != 1 || logits.w != 1 || logits.c != 2 {
        return Err(NnError::ShapeMismatch {
            context: format!(
                "softmax_ce: logits {:?} vs {} labels",
                logits.shape(),
                labels.len()
            ),
        });
    }
    let mut grad = logits.clone();
    let mut total = T::zero();
    for n in 0..logits.n {
        let start = grad.idx(n, 0, 0, 0);
        let row = &mut grad.as_mut_slice()[start..start + 2];
        let max = if row[0] > row[1] { row[0] } else { row[1] };
        let e0 = (row[0] - max).exp();
        let e1 = (row[1] - max).exp();
        let sum = e0 + e1;
        let lse = max + sum.ln();
        let truth = labels[n].index();
        total += lse - if truth == 0 { row[0] } else { row[1] };
        row[0] = e0 / sum;
        row[1] = e1 / sum;
        row[truth] -= T::one();
    }
    Ok((total, grad))
}

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits, `(softmax - onehot) / batch`.
pub fn softmax_ce<T: Scalar>(
    logits: &Tensor4<T>,
    labels: &[ClassLabel],
) -> Result<(T, Tensor4<T>), NnError> {
    let (total, mut grad) = softmax_ce_sum(logits, labels)?;
    let inv = T::one() / T::from_f64(labels.len() as f64);
    for g in grad.as_mut_slice() {
        *g *= inv;
    }
    Ok((total * inv, grad))
}
