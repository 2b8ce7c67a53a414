//! Batched 4-D tensor (batch, channels, height, width), row-major with
//! width innermost, generic over f32 (training) and f64 (gradient checks).

use num_traits::{Float, NumAssign};

/// Element type for network math. Training runs in f32; verification against
/// finite differences runs the same code in f64.
pub trait Scalar: Float + NumAssign + Send + Sync + std::fmt::Debug + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            n,
            c,
            h,
            w,
            data: vec![T::zero(); n * c * h * w],
        }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * c * h * w, "Tensor4::from_vec: length mismatch");
        Self { n, c, h, w, data }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    #[inline]
    pub fn idx(&self, n: usize, c: usize, i: usize, j: usize) -> usize {
        ((n * self.c + c) * self.h + i) * self.w + j
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, i: usize, j: usize) -> T {
        self.data[self.idx(n, c, i, j)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, i: usize, j: usize, v: T) {
        let k = self.idx(n, c, i, j);
        self.data[k] = v;
    }

    /// Row (n, c, i, 0..w) as a slice; the hot loops work on these.
    #[inline]
    pub fn row(&self, n: usize, c: usize, i: usize) -> &[T] {
        let start = self.idx(n, c, i, 0);
        &self.data[start..start + self.w]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize, c: usize, i: usize) -> &mut [T] {
        let start = self.idx(n, c, i, 0);
        &mut self.data[start..start + self.w]
    }

    /// All values of batch item `n`.
    pub fn item(&self, n: usize) -> &[T] {
        let sz = self.c * self.h * self.w;
        &self.data[n * sz..(n + 1) * sz]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Same buffer under new dims; total element count must match.
    pub fn reshaped(self, n: usize, c: usize, h: usize, w: usize) -> Self {
        assert_eq!(self.data.len(), n * c * h * w, "reshape: element count mismatch");
        Self { n, c, h, w, data: self.data }
    }
}
