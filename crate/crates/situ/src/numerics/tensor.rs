//! Dense row-major matrices with explicit, fixed-order loops.
//!
//! No BLAS: summation order is part of the contract so that identical seeds
//! give bit-identical runs.

use std::fmt;

use crate::error::{Error, Result};

/// Scalar type the compute path is instantiated at. f64 is the default
/// throughout; f32 is selectable for speed.
pub trait Real:
    num_traits::Float + num_traits::NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const NAME: &'static str;
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const NAME: &'static str = "f64";
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Guard for norm denominators so division never sees exact zero.
pub const NORM_GUARD: f64 = 1e-12;

/// Probability floor applied inside log-likelihood terms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Dense rows×cols matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Tensor2<R> {
    pub fn new(rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "tensor: {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: R) -> Self {
        Tensor2 { rows, cols, data: vec![v; rows * cols] }
    }

    /// 1×n row vector from a slice of f64 (the storage type of datasets).
    pub fn row_from_f64(values: &[f64]) -> Self {
        Tensor2 {
            rows: 1,
            cols: values.len(),
            data: values.iter().map(|&v| R::from_f64(v)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> R {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: R) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[R] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [R] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn l2_norm(&self) -> R {
        let mut s = R::zero();
        for &v in &self.data {
            s += v * v;
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> R {
        let mut m = R::zero();
        for &v in &self.data {
            let a = v.abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.as_f64()).collect()
    }

    /// Convert element type (f64 checkpoint storage <-> runtime precision).
    pub fn cast<S: Real>(&self) -> Tensor2<S> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| S::from_f64(v.as_f64())).collect(),
        }
    }

    fn same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{op}: shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

// ── Pure kernels ──────────────────────────────────────────────────────────
// These are the single source of truth for each operation; the tape records
// the same computations and replays their adjoints.

/// y = x·Wᵀ + b for a row vector x: 1×n, W: m×n, b: 1×m. Returns 1×m.
pub fn affine<R: Real>(x: &Tensor2<R>, w: &Tensor2<R>, b: &Tensor2<R>) -> Result<Tensor2<R>> {
    let mut y = matvec(x, w)?;
    if b.shape() != (1, w.rows) {
        return Err(Error::Shape(format!(
            "affine: bias is {}x{} but W is {}x{} (bias must be 1x{})",
            b.rows, b.cols, w.rows, w.cols, w.rows
        )));
    }
    for j in 0..y.cols {
        y.data[j] += b.data[j];
    }
    Ok(y)
}

/// y = x·Wᵀ for a row vector x: 1×n, W: m×n. Returns 1×m.
pub fn matvec<R: Real>(x: &Tensor2<R>, w: &Tensor2<R>) -> Result<Tensor2<R>> {
    if x.rows != 1 || x.cols != w.cols {
        return Err(Error::Shape(format!(
            "matvec: x is {}x{} but W is {}x{} (need x: 1x{})",
            x.rows, x.cols, w.rows, w.cols, w.cols
        )));
    }
    let n = w.cols;
    let mut out = Tensor2::zeros(1, w.rows);
    for j in 0..w.rows {
        let wr = &w.data[j * n..(j + 1) * n];
        let mut s = R::zero();
        for i in 0..n {
            s += wr[i] * x.data[i];
        }
        out.data[j] = s;
    }
    Ok(out)
}

/// Row-wise softmax with max subtraction. Requires at least one column.
pub fn softmax<R: Real>(x: &Tensor2<R>) -> Result<Tensor2<R>> {
    if x.cols == 0 {
        return Err(Error::Shape("softmax: empty input (0 columns)".into()));
    }
    let mut out = Tensor2::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = x.row(r);
        let mut m = row[0];
        for &v in row {
            if v > m {
                m = v;
            }
        }
        let orow = out.row_mut(r);
        let mut z = R::zero();
        for (o, &v) in orow.iter_mut().zip(row) {
            let e = (v - m).exp();
            *o = e;
            z += e;
        }
        for o in orow.iter_mut() {
            *o = *o / z;
        }
    }
    Ok(out)
}

pub fn add<R: Real>(a: &Tensor2<R>, b: &Tensor2<R>) -> Result<Tensor2<R>> {
    a.same_shape(b, "add")?;
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect();
    Tensor2::new(a.rows, a.cols, data)
}

pub fn mul<R: Real>(a: &Tensor2<R>, b: &Tensor2<R>) -> Result<Tensor2<R>> {
    a.same_shape(b, "mul")?;
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x * y).collect();
    Tensor2::new(a.rows, a.cols, data)
}

pub fn scale<R: Real>(x: &Tensor2<R>, c: R) -> Tensor2<R> {
    x.map(|v| v * c)
}

pub fn one_minus<R: Real>(x: &Tensor2<R>) -> Tensor2<R> {
    x.map(|v| R::one() - v)
}

pub fn tanh_t<R: Real>(x: &Tensor2<R>) -> Tensor2<R> {
    x.map(|v| v.tanh())
}

pub fn relu_t<R: Real>(x: &Tensor2<R>) -> Tensor2<R> {
    x.map(|v| if v > R::zero() { v } else { R::zero() })
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid_t<R: Real>(x: &Tensor2<R>) -> Tensor2<R> {
    x.map(sigmoid_scalar)
}

#[inline]
pub fn sigmoid_scalar<R: Real>(v: R) -> R {
    if v >= R::zero() {
        R::one() / (R::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (R::one() + e)
    }
}

/// v / max(‖v‖₂, 1e-12).
pub fn unit_norm<R: Real>(x: &Tensor2<R>) -> Tensor2<R> {
    let guard = R::from_f64(NORM_GUARD);
    let n = x.l2_norm();
    let d = if n > guard { n } else { guard };
    x.map(|v| v / d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_identity_passes_input_through() {
        let x = Tensor2::<f64>::new(1, 3, vec![0.5, -1.0, 2.0]).unwrap();
        let w = Tensor2::new(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let b = Tensor2::zeros(1, 3);
        let y = affine(&x, &w, &b).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn affine_zero_input_returns_bias() {
        let x = Tensor2::<f64>::zeros(1, 4);
        let w = Tensor2::filled(2, 4, 3.0);
        let b = Tensor2::new(1, 2, vec![0.25, -0.75]).unwrap();
        let y = affine(&x, &w, &b).unwrap();
        assert_eq!(y.data(), &[0.25, -0.75]);
    }

    #[test]
    fn affine_hand_example() {
        // x = [1,1], W = [[1,1],[2,2]], b = 0: y_j = Σ_i W[j,i]·x_i = [2, 4].
        let x = Tensor2::<f64>::new(1, 2, vec![1., 1.]).unwrap();
        let w = Tensor2::new(2, 2, vec![1., 1., 2., 2.]).unwrap();
        let b = Tensor2::zeros(1, 2);
        let y = affine(&x, &w, &b).unwrap();
        assert_eq!(y.data(), &[2.0, 4.0]);
    }

    #[test]
    fn affine_shape_mismatch_names_both_shapes() {
        let x = Tensor2::<f64>::zeros(1, 3);
        let w = Tensor2::zeros(2, 4);
        let b = Tensor2::zeros(1, 2);
        let err = affine(&x, &w, &b).unwrap_err().to_string();
        assert!(err.contains("1x3") && err.contains("2x4"), "got: {err}");
    }

    #[test]
    fn softmax_uniform_on_constant_logits() {
        let x = Tensor2::<f64>::filled(1, 4, 1.5);
        let y = softmax(&x).unwrap();
        for &v in y.data() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_handles_large_magnitude_logits() {
        for c in [1000.0f64, -1000.0] {
            let x = Tensor2::new(1, 3, vec![c, c + 1.0, c - 1.0]).unwrap();
            let y = softmax(&x).unwrap();
            assert!(y.all_finite());
            let s: f64 = y.data().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let x = Tensor2::<f64>::new(1, 4, vec![0.3, -1.2, 2.0, 0.0]).unwrap();
        let shifted = x.map(|v| v + 123.456);
        let a = softmax(&x).unwrap();
        let b = softmax(&shifted).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn softmax_empty_input_is_an_error() {
        let x = Tensor2::<f64>::zeros(1, 0);
        assert!(softmax(&x).is_err());
    }

    #[test]
    fn unit_norm_zero_vector_stays_zero() {
        let x = Tensor2::<f64>::zeros(1, 5);
        let y = unit_norm(&x);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_norm_result_has_unit_length() {
        let x = Tensor2::<f64>::new(1, 3, vec![3.0, 4.0, 0.0]).unwrap();
        let y = unit_norm(&x);
        assert!((y.l2_norm() - 1.0).abs() < 1e-12);
    }
}
