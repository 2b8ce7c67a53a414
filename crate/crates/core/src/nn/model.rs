//! Model assembly: the fixed conv stack, parameter bookkeeping, forward and
//! backward chains, and the checkpoint format.
//!
//! Checkpoint layout (all little-endian):
//!
//! ```text
//! 8 bytes   magic "FRGCNN01"
//! u32       number of layers
//! per layer u8 tag: 0 conv, 1 relu, 2 maxpool, 3 flatten, 4 fc, 5 softmax
//!           conv: u32 in_ch, u32 out_ch, u32 kernel, u32 stride
//!           fc:   u32 in_dim, u32 out_dim
//! then, for each parametric layer in declaration order:
//!           weights then bias as f32 values
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::nn::layers::{
    conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool_backward, maxpool_forward,
    relu_backward, relu_forward, softmax,
};
use crate::nn::tensor::{Scalar, Tensor4};
use crate::nn::NnError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FRGCNN01";

/// Shape-level description of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
    },
    ReLU,
    MaxPool2d,
    Flatten,
    FullyConnected {
        in_dim: usize,
        out_dim: usize,
    },
    Softmax,
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => out_ch * (in_ch * kernel * kernel + 1),
            LayerSpec::FullyConnected { in_dim, out_dim } => out_dim * (in_dim + 1),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
#[doc(hidden)]
pub(crate) enum Layer<T> {
    Conv {
        weight: Tensor4<T>,
        bias: Vec<T>,
        stride: usize,
    },
    Relu,
    MaxPool,
    Flatten,
    Fc {
        weight: Vec<T>,
        bias: Vec<T>,
        in_dim: usize,
        out_dim: usize,
    },
    Softmax,
}

/// Per-layer activation caches from a forward pass, consumed by backward.
pub enum Cache<T> {
    Input(Tensor4<T>),
    Pool {
        argmax: Vec<usize>,
        in_shape: (usize, usize, usize, usize),
    },
    FlatShape((usize, usize, usize, usize)),
    None,
}

/// Gradients for one parametric layer, flat, weights then bias.
#[derive(Debug, Clone)]
pub struct ParamGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ParamGrad<T> {
    pub fn add_assign(&mut self, other: &ParamGrad<T>) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            *a += *b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in self.weight.iter_mut() {
            *a *= s;
        }
        for a in self.bias.iter_mut() {
            *a *= s;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CnnModel<T> {
    pub(crate) layers: Vec<Layer<T>>,
    input_channels: usize,
}

/// The classifier architecture: four 3x3 conv blocks (8, 16, 32, 96 filters,
/// strides 1/1/2/2, pooling after blocks 1 and 3), then 50-32-2 fully
/// connected with a trailing softmax. On 3x256x256 inputs this totals
/// 1,115,524 trainable parameters.
pub fn build_cnn_for_input<T: Scalar>(
    in_ch: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<CnnModel<T>, NnError> {
    // (filters, stride, pool after this block)
    let conv_plan = [(8usize, 1usize, true), (16, 1, false), (32, 2, true), (96, 2, false)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let (mut c, mut h, mut w) = (in_ch, height, width);
    for (out_ch, stride, pool_after) in conv_plan {
        if h < 3 || w < 3 {
            return Err(NnError::ShapeMismatch {
                context: format!("input {height}x{width} shrinks below 3x3 at conv input {h}x{w}"),
            });
        }
        layers.push(he_conv(&mut rng, c, out_ch, 3, stride));
        layers.push(Layer::Relu);
        c = out_ch;
        h = (h - 3) / stride + 1;
        w = (w - 3) / stride + 1;
        if pool_after {
            layers.push(Layer::MaxPool);
            h /= 2;
            w /= 2;
        }
    }
    layers.push(Layer::Flatten);
    let mut dim = c * h * w;
    for out_dim in [50usize, 32] {
        layers.push(he_fc(&mut rng, dim, out_dim));
        layers.push(Layer::Relu);
        dim = out_dim;
    }
    layers.push(he_fc(&mut rng, dim, 2));
    layers.push(Layer::Softmax);

    Ok(CnnModel {
        layers,
        input_channels: in_ch,
    })
}

/// The published configuration: 3-channel 256x256 input.
pub fn build_paper_cnn(seed: u64) -> CnnModel<f32> {
    build_cnn_for_input(3, 256, 256, seed).expect("256x256 input always fits the stack")
}

fn he_conv<T: Scalar>(
    rng: &mut ChaCha8Rng,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
) -> Layer<T> {
    let fan_in = in_ch * kernel * kernel;
    let std = (2.0 / fan_in as f64).sqrt();
    let data: Vec<T> = (0..out_ch * in_ch * kernel * kernel)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::from_f64(z * std)
        })
        .collect();
    Layer::Conv {
        weight: Tensor4::from_vec(out_ch, in_ch, kernel, kernel, data),
        bias: vec![T::zero(); out_ch],
        stride,
    }
}

fn he_fc<T: Scalar>(rng: &mut ChaCha8Rng, in_dim: usize, out_dim: usize) -> Layer<T> {
    let std = (2.0 / in_dim as f64).sqrt();
    let weight: Vec<T> = (0..in_dim * out_dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::from_f64(z * std)
        })
        .collect();
    Layer::Fc {
        weight,
        bias: vec![T::zero(); out_dim],
        in_dim,
        out_dim,
    }
}

impl<T: Scalar> CnnModel<T> {
    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Conv { weight, stride, .. } => LayerSpec::Conv2d {
                    in_ch: weight.c,
                    out_ch: weight.n,
                    kernel: weight.h,
                    stride: *stride,
                },
                Layer::Relu => LayerSpec::ReLU,
                Layer::MaxPool => LayerSpec::MaxPool2d,
                Layer::Flatten => LayerSpec::Flatten,
                Layer::Fc {
                    in_dim, out_dim, ..
                } => LayerSpec::FullyConnected {
                    in_dim: *in_dim,
                    out_dim: *out_dim,
                },
                Layer::Softmax => LayerSpec::Softmax,
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.specs().iter().map(|s| s.param_count()).sum()
    }

    /// Parameter counts of the parametric layers, in order.
    pub fn parametric_param_counts(&self) -> Vec<usize> {
        self.specs()
            .iter()
            .map(|s| s.param_count())
            .filter(|&c| c > 0)
            .collect()
    }

    /// (channels, height, width) after every layer for the given input.
    pub fn output_shapes(&self, height: usize, width: usize) -> Vec<(usize, usize, usize)> {
        let (mut c, mut h, mut w) = (self.input_channels, height, width);
        let mut shapes = Vec::new();
        for spec in self.specs() {
            match spec {
                LayerSpec::Conv2d { out_ch, kernel, stride, .. } => {
                    c = out_ch;
                    h = (h - kernel) / stride + 1;
                    w = (w - kernel) / stride + 1;
                }
                LayerSpec::MaxPool2d => {
                    h /= 2;
                    w /= 2;
                }
                LayerSpec::Flatten => {
                    c = c * h * w;
                    h = 1;
                    w = 1;
                }
                LayerSpec::FullyConnected { out_dim, .. } => {
                    c = out_dim;
                    h = 1;
                    w = 1;
                }
                LayerSpec::ReLU | LayerSpec::Softmax => {}
            }
            shapes.push((c, h, w));
        }
        shapes
    }

    /// Table-style summary: layer type, output shape, parameter count.
    pub fn summary(&self, height: usize, width: usize) -> String {
        let mut out = String::from("Layer            Output Shape        Param #\n");
        for ((idx, spec), (c, h, w)) in
            self.specs().iter().enumerate().zip(self.output_shapes(height, width))
        {
            let name = match spec {
                LayerSpec::Conv2d { .. } => "Conv2d",
                LayerSpec::ReLU => "ReLU",
                LayerSpec::MaxPool2d => "MaxPool2d",
                LayerSpec::Flatten => "Flatten",
                LayerSpec::FullyConnected { .. } => "FC",
                LayerSpec::Softmax => "Softmax",
            };
            let shape = if h == 1 && w == 1 {
                format!("[-1, {c}]")
            } else {
                format!("[-1, {c}, {h}, {w}]")
            };
            out.push_str(&format!(
                "{:<2} {name:<12} {shape:<19} {}\n",
                idx + 1,
                spec.param_count()
            ));
        }
        out.push_str(&format!("Total trainable parameters: {}\n", self.param_count()));
        out
    }

    /// Forward pass up to the logits (the trailing softmax marker is not
    /// applied), keeping per-layer caches for backward.
    pub fn forward_logits(&self, x: Tensor4<T>) -> Result<(Tensor4<T>, Vec<Cache<T>>), NnError> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x;
        for layer in &self.layers {
            match layer {
                Layer::Conv { weight, bias, stride } => {
                    let y = conv2d_forward(&cur, weight, bias, *stride)?;
                    caches.push(Cache::Input(std::mem::replace(&mut cur, y)));
                }
                Layer::Relu => {
                    let y = relu_forward(&cur);
                    caches.push(Cache::Input(std::mem::replace(&mut cur, y)));
                }
                Layer::MaxPool => {
                    let in_shape = cur.shape();
                    let (y, argmax) = maxpool_forward(&cur)?;
                    caches.push(Cache::Pool { argmax, in_shape });
                    cur = y;
                }
                Layer::Flatten => {
                    let shape = cur.shape();
                    caches.push(Cache::FlatShape(shape));
                    cur = cur.reshaped(shape.0, shape.1 * shape.2 * shape.3, 1, 1);
                }
                Layer::Fc { weight, bias, in_dim, out_dim } => {
                    let y = fc_forward(&cur, weight, bias, *in_dim, *out_dim)?;
                    caches.push(Cache::Input(std::mem::replace(&mut cur, y)));
                }
                Layer::Softmax => caches.push(Cache::None),
            }
        }
        Ok((cur, caches))
    }

    /// Forward pass to class probabilities (softmax applied), no caches.
    pub fn forward_probabilities(&self, x: Tensor4<T>) -> Result<Tensor4<T>, NnError> {
        let (logits, _) = self.forward_logits(x)?;
        Ok(softmax(&logits))
    }

    /// Backpropagate from the logits gradient, returning one gradient set
    /// per parametric layer, in declaration order.
    pub fn backward(
        &self,
        grad_logits: Tensor4<T>,
        caches: Vec<Cache<T>>,
    ) -> Result<Vec<ParamGrad<T>>, NnError> {
        let mut grads_rev = Vec::new();
        let mut grad = grad_logits;
        for (layer, cache) in self.layers.iter().zip(caches.into_iter()).rev() {
            match (layer, cache) {
                (Layer::Conv { weight, stride, .. }, Cache::Input(x)) => {
                    let (gx, gw, gb) = conv2d_backward(&x, weight, &grad, *stride)?;
                    grads_rev.push(ParamGrad {
                        weight: gw.as_slice().to_vec(),
                        bias: gb,
                    });
                    grad = gx;
                }
                (Layer::Relu, Cache::Input(x)) => {
                    grad = relu_backward(&x, &grad)?;
                }
                (Layer::MaxPool, Cache::Pool { argmax, in_shape }) => {
                    grad = maxpool_backward(&grad, &argmax, in_shape)?;
                }
                (Layer::Flatten, Cache::FlatShape((n, c, h, w))) => {
                    grad = grad.reshaped(n, c, h, w);
                }
                (Layer::Fc { weight, in_dim, out_dim, .. }, Cache::Input(x)) => {
                    let (gx, gw, gb) = fc_backward(&x, weight, &grad, *in_dim, *out_dim)?;
                    grads_rev.push(ParamGrad { weight: gw, bias: gb });
                    grad = gx;
                }
                (Layer::Softmax, Cache::None) => {
                    // Training losses differentiate through softmax jointly
                    // with the loss; the marker passes gradients through.
                }
                _ => {
                    return Err(NnError::ShapeMismatch {
                        context: "cache sequence does not match layer sequence".into(),
                    })
                }
            }
        }
        grads_rev.reverse();
        Ok(grads_rev)
    }

    /// Mutable views of each parametric layer's (weights, bias), in order.
    pub fn params_mut(&mut self) -> Vec<(&mut [T], &mut [T])> {
        self.layers
            .iter_mut()
            .filter_map(|l| match l {
                Layer::Conv { weight, bias, .. } => {
                    Some((weight.as_mut_slice(), bias.as_mut_slice()))
                }
                Layer::Fc { weight, bias, .. } => Some((weight.as_mut_slice(), bias.as_mut_slice())),
                _ => None,
            })
            .collect()
    }

    pub fn params(&self) -> Vec<(&[T], &[T])> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Conv { weight, bias, .. } => Some((weight.as_slice(), bias.as_slice())),
                Layer::Fc { weight, bias, .. } => Some((weight.as_slice(), bias.as_slice())),
                _ => None,
            })
            .collect()
    }
}

impl CnnModel<f32> {
    /// Serialize to the checkpoint format documented in the module docs.
    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for spec in self.specs() {
            match spec {
                LayerSpec::Conv2d { in_ch, out_ch, kernel, stride } => {
                    buf.push(0);
                    for v in [in_ch, out_ch, kernel, stride] {
                        buf.extend_from_slice(&(v as u32).to_le_bytes());
                    }
                }
                LayerSpec::ReLU => buf.push(1),
                LayerSpec::MaxPool2d => buf.push(2),
                LayerSpec::Flatten => buf.push(3),
                LayerSpec::FullyConnected { in_dim, out_dim } => {
                    buf.push(4);
                    for v in [in_dim, out_dim] {
                        buf.extend_from_slice(&(v as u32).to_le_bytes());
                    }
                }
                LayerSpec::Softmax => buf.push(5),
            }
        }
        for (w, b) in self.params() {
            for &v in w {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            for &v in b {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let bytes = std::fs::read(path)?;
        let bad = |reason: &str| NnError::BadCheckpoint {
            reason: reason.to_string(),
        };
        if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing checkpoint magic"));
        }
        let n_layers = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut pos = 12usize;
        let take_u32 = |pos: &mut usize| -> Result<usize, NnError> {
            if *pos + 4 > bytes.len() {
                return Err(bad("truncated layer table"));
            }
            let v = u32::from_le_bytes(bytes[*pos..*pos + 4].try_into().unwrap()) as usize;
            *pos += 4;
            Ok(v)
        };
        let mut specs = Vec::with_capacity(n_layers);
        let mut input_channels = 0;
        for _ in 0..n_layers {
            if pos >= bytes.len() {
                return Err(bad("truncated layer table"));
            }
            let tag = bytes[pos];
            pos += 1;
            let spec = match tag {
                0 => {
                    let in_ch = take_u32(&mut pos)?;
                    let out_ch = take_u32(&mut pos)?;
                    let kernel = take_u32(&mut pos)?;
                    let stride = take_u32(&mut pos)?;
                    if input_channels == 0 {
                        input_channels = in_ch;
                    }
                    LayerSpec::Conv2d { in_ch, out_ch, kernel, stride }
                }
                1 => LayerSpec::ReLU,
                2 => LayerSpec::MaxPool2d,
                3 => LayerSpec::Flatten,
                4 => LayerSpec::FullyConnected {
                    in_dim: take_u32(&mut pos)?,
                    out_dim: take_u32(&mut pos)?,
                },
                5 => LayerSpec::Softmax,
                _ => return Err(bad("unknown layer tag")),
            };
            specs.push(spec);
        }
        let take_f32s = |pos: &mut usize, count: usize| -> Result<Vec<f32>, NnError> {
            if *pos + 4 * count > bytes.len() {
                return Err(bad("truncated parameters"));
            }
            let out = bytes[*pos..*pos + 4 * count]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            *pos += 4 * count;
            Ok(out)
        };
        let mut layers = Vec::with_capacity(n_layers);
        for spec in specs {
            layers.push(match spec {
                LayerSpec::Conv2d { in_ch, out_ch, kernel, stride } => {
                    let w = take_f32s(&mut pos, out_ch * in_ch * kernel * kernel)?;
                    let b = take_f32s(&mut pos, out_ch)?;
                    Layer::Conv {
                        weight: Tensor4::from_vec(out_ch, in_ch, kernel, kernel, w),
                        bias: b,
                        stride,
                    }
                }
                LayerSpec::ReLU => Layer::Relu,
                LayerSpec::MaxPool2d => Layer::MaxPool,
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::FullyConnected { in_dim, out_dim } => {
                    let w = take_f32s(&mut pos, in_dim * out_dim)?;
                    let b = take_f32s(&mut pos, out_dim)?;
                    Layer::Fc { weight: w, bias: b, in_dim, out_dim }
                }
                LayerSpec::Softmax => Layer::Softmax,
            });
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes after parameters"));
        }
        Ok(CnnModel {
            layers,
            input_channels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_model_parameter_totals() {
        let m = build_paper_cnn(0);
        assert_eq!(m.param_count(), 1_115_524);
        assert_eq!(
            m.parametric_param_counts(),
            vec![224, 1168, 4640, 27744, 1_080_050, 1632, 66]
        );
    }

    #[test]
    fn paper_model_shape_chain() {
        let m = build_paper_cnn(0);
        let shapes = m.output_shapes(256, 256);
        let expected = [
            (8, 254, 254),
            (8, 254, 254),
            (8, 127, 127),
            (16, 125, 125),
            (16, 125, 125),
            (32, 62, 62),
            (32, 62, 62),
            (32, 31, 31),
            (96, 15, 15),
            (96, 15, 15),
            (21600, 1, 1),
            (50, 1, 1),
            (50, 1, 1),
            (32, 1, 1),
            (32, 1, 1),
            (2, 1, 1),
            (2, 1, 1),
        ];
        assert_eq!(shapes, expected);
    }

    #[test]
    fn seventeen_layers_in_order() {
        let m = build_paper_cnn(0);
        let specs = m.specs();
        assert_eq!(specs.len(), 17);
        assert!(matches!(specs[0], LayerSpec::Conv2d { in_ch: 3, out_ch: 8, kernel: 3, stride: 1 }));
        assert!(matches!(specs[2], LayerSpec::MaxPool2d));
        assert!(matches!(specs[5], LayerSpec::Conv2d { in_ch: 16, out_ch: 32, stride: 2, .. }));
        assert!(matches!(specs[10], LayerSpec::Flatten));
        assert!(matches!(specs[11], LayerSpec::FullyConnected { in_dim: 21600, out_dim: 50 }));
        assert!(matches!(specs[16], LayerSpec::Softmax));
    }

    #[test]
    fn reduced_input_shrinks_only_the_first_fc() {
        let m: CnnModel<f32> = build_cnn_for_input(3, 64, 64, 1).unwrap();
        let specs = m.specs();
        assert!(matches!(specs[11], LayerSpec::FullyConnected { in_dim: 864, out_dim: 50 }));
        let shapes = m.output_shapes(64, 64);
        assert_eq!(shapes[9], (96, 3, 3));
    }

    #[test]
    fn too_small_input_is_rejected() {
        assert!(build_cnn_for_input::<f32>(3, 16, 16, 0).is_err());
    }

    #[test]
    fn forward_produces_two_logits_and_probabilities() {
        let m: CnnModel<f32> = build_cnn_for_input(3, 64, 64, 3).unwrap();
        let x = Tensor4::zeros(2, 3, 64, 64);
        let (logits, _) = m.forward_logits(x.clone()).unwrap();
        assert_eq!(logits.shape(), (2, 2, 1, 1));
        let p = m.forward_probabilities(x).unwrap();
        for n in 0..2 {
            let sum = p.get(n, 0, 0, 0) + p.get(n, 1, 0, 0);
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn batch_equals_singles_bit_for_bit() {
        let m: CnnModel<f32> = build_cnn_for_input(3, 64, 64, 9).unwrap();
        let mut batch = Tensor4::zeros(3, 3, 64, 64);
        for n in 0..3 {
            for (i, v) in batch
                .as_mut_slice()
                .iter_mut()
                .skip(n * 3 * 64 * 64)
                .take(3 * 64 * 64)
                .enumerate()
            {
                *v = (((i + n * 7919) * 2654435761usize) % 1000) as f32 / 1000.0;
            }
        }
        let (batch_logits, _) = m.forward_logits(batch.clone()).unwrap();
        for n in 0..3 {
            let single = Tensor4::from_vec(1, 3, 64, 64, batch.item(n).to_vec());
            let (logits, _) = m.forward_logits(single).unwrap();
            assert_eq!(logits.get(0, 0, 0, 0), batch_logits.get(n, 0, 0, 0));
            assert_eq!(logits.get(0, 1, 0, 0), batch_logits.get(n, 1, 0, 0));
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let m: CnnModel<f32> = build_cnn_for_input(3, 64, 64, 17).unwrap();
        m.save(&path).unwrap();
        let back = CnnModel::load(&path).unwrap();
        assert_eq!(back.specs(), m.specs());
        for ((w1, b1), (w2, b2)) in m.params().iter().zip(back.params()) {
            assert_eq!(*w1, w2);
            assert_eq!(*b1, b2);
        }
        // Same forward output.
        let x = Tensor4::from_vec(
            1,
            3,
            64,
            64,
            (0..3 * 64 * 64).map(|i| (i % 97) as f32 / 97.0).collect(),
        );
        let (a, _) = m.forward_logits(x.clone()).unwrap();
        let (b, _) = back.forward_logits(x).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
