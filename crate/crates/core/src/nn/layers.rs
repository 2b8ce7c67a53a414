//! Layer forward and backward passes, written directly against the tensor
//! layout. Items of a batch never interact, so batched output equals the
//! concatenation of per-item outputs bit for bit.

use crate::nn::tensor::{Scalar, Tensor4};
use crate::nn::NnError;

/// Valid (no padding) cross-correlation. `weight` is (out_ch, in_ch, k, k);
/// output spatial dims are `(in - k) / stride + 1`.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &Tensor4<T>,
    bias: &[T],
    stride: usize,
) -> Result<Tensor4<T>, NnError> {
    let (oc, ic, k, k2) = weight.shape();
    if k != k2 || ic != x.c || bias.len() != oc || x.h < k || x.w < k || stride == 0 {
        return Err(NnError::ShapeMismatch {
            context: format!(
                "conv2d: input {:?}, weight {:?}, bias {}, stride {stride}",
                x.shape(),
                weight.shape(),
                bias.len()
            ),
        });
    }
    let oh = (x.h - k) / stride + 1;
    let ow = (x.w - k) / stride + 1;
    let mut y = Tensor4::zeros(x.n, oc, oh, ow);
    for n in 0..x.n {
        for o in 0..oc {
            for i in 0..oh {
                let row = y.row_mut(n, o, i);
                for v in row.iter_mut() {
                    *v = bias[o];
                }
            }
            for c in 0..ic {
                for p in 0..k {
                    for q in 0..k {
                        let wv = weight.get(o, c, p, q);
                        for i in 0..oh {
                            let xrow = x.row(n, c, i * stride + p);
                            let start = y.idx(n, o, i, 0);
                            // Manual indexing keeps the inner loop tight.
                            let yrow = &mut y.as_mut_slice()[start..start + ow];
                            for (j, out) in yrow.iter_mut().enumerate() {
                                *out += wv * xrow[j * stride + q];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

/// Exact gradients of [`conv2d_forward`] with respect to input, weights,
/// and bias, given the upstream gradient.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &Tensor4<T>,
    grad_out: &Tensor4<T>,
    stride: usize,
) -> Result<(Tensor4<T>, Tensor4<T>, Vec<T>), NnError> {
    let (oc, ic, k, _) = weight.shape();
    let oh = (x.h - k) / stride + 1;
    let ow = (x.w - k) / stride + 1;
    if grad_out.shape() != (x.n, oc, oh, ow) {
        return Err(NnError::ShapeMismatch {
            context: format!(
                "conv2d backward: grad {:?} does not match forward output ({}, {oc}, {oh}, {ow})",
                grad_out.shape(),
                x.n
            ),
        });
    }
    let mut gx = Tensor4::zeros(x.n, x.c, x.h, x.w);
    let mut gw = Tensor4::zeros(oc, ic, k, k);
    let mut gb = vec![T::zero(); oc];
    for n in 0..x.n {
        for o in 0..oc {
            for i in 0..oh {
                let grow = grad_out.row(n, o, i);
                let mut sum = T::zero();
                for &g in grow {
                    sum += g;
                }
                gb[o] += sum;
            }
            for c in 0..ic {
                for p in 0..k {
                    for q in 0..k {
                        let wv = weight.get(o, c, p, q);
                        let mut wacc = T::zero();
                        for i in 0..oh {
                            let grow = grad_out.row(n, o, i);
                            let xrow = x.row(n, c, i * stride + p);
                            let gxstart = gx.idx(n, c, i * stride + p, 0);
                            let gxrow = &mut gx.as_mut_slice()[gxstart..gxstart + x.w];
                            for (j, &g) in grow.iter().enumerate() {
                                wacc += g * xrow[j * stride + q];
                                gxrow[j * stride + q] += g * wv;
                            }
                        }
                        let widx = weight.idx(o, c, p, q);
                        gw.as_mut_slice()[widx] += wacc;
                    }
                }
            }
        }
    }
    Ok((gx, gw, gb))
}

/// 2x2 stride-2 max pooling with floor semantics (odd trailing row/column
/// dropped). Returns the pooled tensor and the flat input index of each
/// window maximum; ties go to the first element in row-major order.
pub fn maxpool_forward<T: Scalar>(x: &Tensor4<T>) -> Result<(Tensor4<T>, Vec<usize>), NnError> {
    if x.h < 2 || x.w < 2 {
        return Err(NnError::ShapeMismatch {
            context: format!("maxpool: spatial dims {:?} below 2x2", (x.h, x.w)),
        });
    }
    let oh = x.h / 2;
    let ow = x.w / 2;
    let mut y = Tensor4::zeros(x.n, x.c, oh, ow);
    let mut argmax = vec![0usize; x.n * x.c * oh * ow];
    let mut out_pos = 0;
    for n in 0..x.n {
        for c in 0..x.c {
            for i in 0..oh {
                for j in 0..ow {
                    let mut best = x.get(n, c, 2 * i, 2 * j);
                    let mut best_idx = x.idx(n, c, 2 * i, 2 * j);
                    for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                        let v = x.get(n, c, 2 * i + di, 2 * j + dj);
                        if v > best {
                            best = v;
                            best_idx = x.idx(n, c, 2 * i + di, 2 * j + dj);
                        }
                    }
                    y.set(n, c, i, j, best);
                    argmax[out_pos] = best_idx;
                    out_pos += 1;
                }
            }
        }
    }
    Ok((y, argmax))
}

/// Route each output gradient back to its window's argmax.
pub fn maxpool_backward<T: Scalar>(
    grad_out: &Tensor4<T>,
    argmax: &[usize],
    in_shape: (usize, usize, usize, usize),
) -> Result<Tensor4<T>, NnError> {
    if grad_out.numel() != argmax.len() {
        return Err(NnError::ShapeMismatch {
            context: format!(
                "maxpool backward: {} gradients vs {} argmax entries",
                grad_out.numel(),
                argmax.len()
            ),
        });
    }
    let (n, c, h, w) = in_shape;
    let mut gx = Tensor4::zeros(n, c, h, w);
    let gx_data = gx.as_mut_slice();
    for (&src, &g) in argmax.iter().zip(grad_out.as_slice()) {
        gx_data[src] += g;
    }
    Ok(gx)
}

/// Elementwise max(0, x).
pub fn relu_forward<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    let mut y = x.clone();
    for v in y.as_mut_slice() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    y
}

/// Gradient of ReLU; the derivative at exactly zero is taken as zero.
pub fn relu_backward<T: Scalar>(x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<Tensor4<T>, NnError> {
    if x.shape() != grad_out.shape() {
        return Err(NnError::ShapeMismatch {
            context: format!("relu backward: {:?} vs {:?}", x.shape(), grad_out.shape()),
        });
    }
    let mut gx = grad_out.clone();
    for (g, &v) in gx.as_mut_slice().iter_mut().zip(x.as_slice()) {
        if v <= T::zero() {
            *g = T::zero();
        }
    }
    Ok(gx)
}

/// Affine map on flattened features: `weight` is out x in row-major, input
/// is (n, in, 1, 1), output (n, out, 1, 1).
pub fn fc_forward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &[T],
    bias: &[T],
    in_dim: usize,
    out_dim: usize,
) -> Result<Tensor4<T>, NnError> {
    if x.c != in_dim || x.h != 1 || x.w != 1 || weight.len() != in_dim * out_dim
        || bias.len() != out_dim
    {
        return Err(NnError::ShapeMismatch {
            context: format!("fc: input {:?} vs {in_dim}->{out_dim}", x.shape()),
        });
    }
    let mut y = Tensor4::zeros(x.n, out_dim, 1, 1);
    for n in 0..x.n {
        let xi = x.item(n);
        for o in 0..out_dim {
            let wrow = &weight[o * in_dim..(o + 1) * in_dim];
            let mut acc = bias[o];
            for (wv, &xv) in wrow.iter().zip(xi) {
                acc += *wv * xv;
            }
            y.set(n, o, 0, 0, acc);
        }
    }
    Ok(y)
}

/// Exact gradients of [`fc_forward`].
pub fn fc_backward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &[T],
    grad_out: &Tensor4<T>,
    in_dim: usize,
    out_dim: usize,
) -> Result<(Tensor4<T>, Vec<T>, Vec<T>), NnError> {
    if grad_out.c != out_dim || grad_out.n != x.n {
        return Err(NnError::ShapeMismatch {
            context: format!(
                "fc backward: grad {:?} vs {in_dim}->{out_dim}",
                grad_out.shape()
            ),
        });
    }
    let mut gx = Tensor4::zeros(x.n, in_dim, 1, 1);
    let mut gw = vec![T::zero(); in_dim * out_dim];
    let mut gb = vec![T::zero(); out_dim];
    for n in 0..x.n {
        let xi = x.item(n);
        for o in 0..out_dim {
            let g = grad_out.get(n, o, 0, 0);
            gb[o] += g;
            let wrow = &weight[o * in_dim..(o + 1) * in_dim];
            let gwrow = &mut gw[o * in_dim..(o + 1) * in_dim];
            let gxstart = gx.idx(n, 0, 0, 0);
            let gxi = &mut gx.as_mut_slice()[gxstart..gxstart + in_dim];
            for i in 0..in_dim {
                gwrow[i] += g * xi[i];
                gxi[i] += g * wrow[i];
            }
        }
    }
    Ok((gx, gw, gb))
}

/// Row-wise numerically stable softmax over the channel dim of (n, c, 1, 1).
pub fn softmax<T: Scalar>(logits: &Tensor4<T>) -> Tensor4<T> {
    let mut y = logits.clone();
    for n in 0..y.n {
        let start = y.idx(n, 0, 0, 0);
        let row = &mut y.as_mut_slice()[start..start + logits.c];
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    y
}
