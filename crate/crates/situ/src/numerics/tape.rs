//! Wengert-list reverse-mode differentiation over `Tensor2` values.
//!
//! Each recorded operation stores its input ids and its forward value.
//! `backward` replays the list exactly once in reverse, accumulating
//! adjoints in fixed index order, so gradients are bit-reproducible.

use crate::error::{Error, Result};
use crate::numerics::tensor::{self, Real, Tensor2, NORM_GUARD, PROB_FLOOR};

/// Handle to a value recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValueId(usize);

#[derive(Debug, Clone)]
enum Op<R: Real> {
    Leaf,
    Affine { x: ValueId, w: ValueId, b: ValueId },
    MatVec { x: ValueId, w: ValueId },
    Add { a: ValueId, b: ValueId },
    Mul { a: ValueId, b: ValueId },
    OneMinus { x: ValueId },
    Scale { x: ValueId, c: R },
    Tanh { x: ValueId },
    Sigmoid { x: ValueId },
    Relu { x: ValueId },
    UnitNorm { x: ValueId },
    Softmax { x: ValueId },
    /// Extract row `row` of a matrix as a 1×cols vector.
    Row { m: ValueId, row: usize },
    /// ln(max(x[idx], floor)) of a row vector, as a 1×1 scalar.
    PickLogFloor { x: ValueId, idx: usize },
    SumElems { x: ValueId },
}

pub struct Tape<R: Real> {
    ops: Vec<Op<R>>,
    vals: Vec<Tensor2<R>>,
}

impl<R: Real> Default for Tape<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> Tape<R> {
    pub fn new() -> Self {
        Tape { ops: Vec::new(), vals: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: ValueId) -> &Tensor2<R> {
        &self.vals[id.0]
    }

    fn push(&mut self, op: Op<R>, val: Tensor2<R>, name: &str) -> Result<ValueId> {
        if !val.all_finite() {
            return Err(Error::NonFinite(format!("{name}: produced NaN or infinity")));
        }
        self.ops.push(op);
        self.vals.push(val);
        Ok(ValueId(self.vals.len() - 1))
    }

    /// Record an input or parameter. Leaves receive gradients but have no
    /// inputs of their own.
    pub fn leaf(&mut self, val: Tensor2<R>) -> ValueId {
        self.ops.push(Op::Leaf);
        self.vals.push(val);
        ValueId(self.vals.len() - 1)
    }

    pub fn zeros_leaf(&mut self, rows: usize, cols: usize) -> ValueId {
        self.leaf(Tensor2::zeros(rows, cols))
    }

    pub fn affine(&mut self, x: ValueId, w: ValueId, b: ValueId) -> Result<ValueId> {
        let val = tensor::affine(&self.vals[x.0], &self.vals[w.0], &self.vals[b.0])?;
        self.push(Op::Affine { x, w, b }, val, "affine")
    }

    pub fn matvec(&mut self, x: ValueId, w: ValueId) -> Result<ValueId> {
        let val = tensor::matvec(&self.vals[x.0], &self.vals[w.0])?;
        self.push(Op::MatVec { x, w }, val, "matvec")
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let val = tensor::add(&self.vals[a.0], &self.vals[b.0])?;
        self.push(Op::Add { a, b }, val, "add")
    }

    pub fn mul(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let val = tensor::mul(&self.vals[a.0], &self.vals[b.0])?;
        self.push(Op::Mul { a, b }, val, "mul")
    }

    pub fn one_minus(&mut self, x: ValueId) -> Result<ValueId> {
        let val = tensor::one_minus(&self.vals[x.0]);
        self.push(Op::OneMinus { x }, val, "one_minus")
    }

    pub fn scale(&mut self, x: ValueId, c: R) -> Result<ValueId> {
        let val = tensor::scale(&self.vals[x.0], c);
        self.push(Op::Scale { x, c }, val, "scale")
    }

    pub fn tanh(&mut self, x: ValueId) -> Result<ValueId> {
        let val = tensor::tanh_t(&self.vals[x.0]);
        self.push(Op::Tanh { x }, val, "tanh")
    }

    pub fn sigmoid(&mut self, x: ValueId) -> Result<ValueId> {
        let val = tensor::sigmoid_t(&self.vals[x.0]);
        self.push(Op::Sigmoid { x }, val, "sigmoid")
    }

    pub fn relu(&mut self, x: ValueId) -> Result<ValueId> {
        let val = tensor::relu_t(&self.vals[x.0]);
        self.push(Op::Relu { x }, val, "relu")
    }

    pub fn unit_norm(&mut self, x: ValueId) -> Result<ValueId> {
        let val = tensor::unit_norm(&self.vals[x.0]);
        self.push(Op::UnitNorm { x }, val, "unit_norm")
    }

    pub fn softmax(&mut self, x: ValueId) -> Result<ValueId> {
        let val = tensor::softmax(&self.vals[x.0])?;
        self.push(Op::Softmax { x }, val, "softmax")
    }

    pub fn row(&mut self, m: ValueId, row: usize) -> Result<ValueId> {
        let src = &self.vals[m.0];
        if row >= src.rows() {
            return Err(Error::Shape(format!(
                "row: index {row} out of range for {}x{}",
                src.rows(),
                src.cols()
            )));
        }
        let val = Tensor2::new(1, src.cols(), src.row(row).to_vec())?;
        self.push(Op::Row { m, row }, val, "row")
    }

    /// ln(max(x[idx], 1e-12)) as a 1×1 scalar. Floored coordinates get zero
    /// gradient (the clamp is flat there).
    pub fn pick_log_floor(&mut self, x: ValueId, idx: usize) -> Result<ValueId> {
        let src = &self.vals[x.0];
        if src.rows() != 1 || idx >= src.cols() {
            return Err(Error::Shape(format!(
                "pick_log_floor: index {idx} out of range for {}x{}",
                src.rows(),
                src.cols()
            )));
        }
        let floor = R::from_f64(PROB_FLOOR);
        let p = src.get(0, idx);
        let v = if p > floor { p.ln() } else { floor.ln() };
        let val = Tensor2::new(1, 1, vec![v])?;
        self.push(Op::PickLogFloor { x, idx }, val, "pick_log_floor")
    }

    pub fn sum_elems(&mut self, x: ValueId) -> Result<ValueId> {
        let src = &self.vals[x.0];
        let mut s = R::zero();
        for &v in src.data() {
            s += v;
        }
        let val = Tensor2::new(1, 1, vec![s])?;
        self.push(Op::SumElems { x }, val, "sum_elems")
    }

    /// Reverse sweep from a scalar loss. Every recorded op is visited exactly
    /// once; untouched leaves report zero gradients.
    pub fn backward(&self, loss: ValueId) -> Result<TapeGrads<R>> {
        let lv = &self.vals[loss.0];
        if lv.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward: loss must be 1x1, got {}x{}",
                lv.rows(),
                lv.cols()
            )));
        }
        let mut grads: Vec<Option<Tensor2<R>>> = vec![None; self.vals.len()];
        grads[loss.0] = Some(Tensor2::filled(1, 1, R::one()));

        for i in (0..self.ops.len()).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.ops[i] {
                Op::Leaf => {
                    grads[i] = Some(g);
                }
                Op::Affine { x, w, b } => {
                    self.back_matvec(&mut grads, &g, *x, *w);
                    accumulate(&mut grads, b.0, &g);
                    grads[i] = Some(g);
                }
                Op::MatVec { x, w } => {
                    self.back_matvec(&mut grads, &g, *x, *w);
                    grads[i] = Some(g);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, a.0, &g);
                    accumulate(&mut grads, b.0, &g);
                    grads[i] = Some(g);
                }
                Op::Mul { a, b } => {
                    let ga = tensor::mul(&g, &self.vals[b.0])?;
                    let gb = tensor::mul(&g, &self.vals[a.0])?;
                    accumulate(&mut grads, a.0, &ga);
                    accumulate(&mut grads, b.0, &gb);
                    grads[i] = Some(g);
                }
                Op::OneMinus { x } => {
                    let gx = tensor::scale(&g, -R::one());
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::Scale { x, c } => {
                    let gx = tensor::scale(&g, *c);
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::Tanh { x } => {
                    let y = &self.vals[i];
                    let mut gx = g.clone();
                    for (gv, &yv) in gx.data_mut().iter_mut().zip(y.data()) {
                        *gv = *gv * (R::one() - yv * yv);
                    }
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::Sigmoid { x } => {
                    let y = &self.vals[i];
                    let mut gx = g.clone();
                    for (gv, &yv) in gx.data_mut().iter_mut().zip(y.data()) {
                        *gv = *gv * yv * (R::one() - yv);
                    }
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::Relu { x } => {
                    let xin = &self.vals[x.0];
                    let mut gx = g.clone();
                    for (gv, &xv) in gx.data_mut().iter_mut().zip(xin.data()) {
                        if xv <= R::zero() {
                            *gv = R::zero();
                        }
                    }
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::UnitNorm { x } => {
                    let guard = R::from_f64(NORM_GUARD);
                    let xin = &self.vals[x.0];
                    let n = xin.l2_norm();
                    let gx = if n > guard {
                        // y = x/n: dx = (g - y·(y·g)) / n
                        let y = &self.vals[i];
                        let mut dot = R::zero();
                        for (&yv, &gv) in y.data().iter().zip(g.data()) {
                            dot += yv * gv;
                        }
                        let mut gx = g.clone();
                        for (gv, &yv) in gx.data_mut().iter_mut().zip(y.data()) {
                            *gv = (*gv - yv * dot) / n;
                        }
                        gx
                    } else {
                        // Clamped region: y = x/guard is linear.
                        tensor::scale(&g, R::one() / guard)
                    };
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::Softmax { x } => {
                    let y = &self.vals[i];
                    let mut gx = Tensor2::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let mut dot = R::zero();
                        for (&yv, &gv) in yr.iter().zip(gr) {
                            dot += yv * gv;
                        }
                        let out = gx.row_mut(r);
                        for ((o, &yv), &gv) in out.iter_mut().zip(yr).zip(gr) {
                            *o = yv * (gv - dot);
                        }
                    }
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
                Op::Row { m, row } => {
                    let src = &self.vals[m.0];
                    let mut gm = Tensor2::zeros(src.rows(), src.cols());
                    gm.row_mut(*row).copy_from_slice(g.data());
                    accumulate(&mut grads, m.0, &gm);
                    grads[i] = Some(g);
                }
                Op::PickLogFloor { x, idx } => {
                    let floor = R::from_f64(PROB_FLOOR);
                    let p = self.vals[x.0].get(0, *idx);
                    if p > floor {
                        let src = &self.vals[x.0];
                        let mut gx = Tensor2::zeros(1, src.cols());
                        gx.set(0, *idx, g.get(0, 0) / p);
                        accumulate(&mut grads, x.0, &gx);
                    }
                    grads[i] = Some(g);
                }
                Op::SumElems { x } => {
                    let src = &self.vals[x.0];
                    let gx = Tensor2::filled(src.rows(), src.cols(), g.get(0, 0));
                    accumulate(&mut grads, x.0, &gx);
                    grads[i] = Some(g);
                }
            }
        }
        Ok(TapeGrads { grads })
    }

    /// Adjoint of y = x·Wᵀ: dx += g·W, dW += gᵀ·x.
    fn back_matvec(
        &self,
        grads: &mut [Option<Tensor2<R>>],
        g: &Tensor2<R>,
        x: ValueId,
        w: ValueId,
    ) {
        let xv = &self.vals[x.0];
        let wv = &self.vals[w.0];
        let (m, n) = wv.shape();

        let mut gx = Tensor2::zeros(1, n);
        for j in 0..m {
            let gj = g.get(0, j);
            let wr = wv.row(j);
            let out = gx.data_mut();
            for i in 0..n {
                out[i] += gj * wr[i];
            }
        }
        accumulate(grads, x.0, &gx);

        let mut gw = Tensor2::zeros(m, n);
        for j in 0..m {
            let gj = g.get(0, j);
            let out = gw.row_mut(j);
            for i in 0..n {
                out[i] = gj * xv.get(0, i);
            }
        }
        accumulate(grads, w.0, &gw);
    }
}

fn accumulate<R: Real>(grads: &mut [Option<Tensor2<R>>], idx: usize, g: &Tensor2<R>) {
    match &mut grads[idx] {
        Some(acc) => {
            for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        None => grads[idx] = Some(g.clone()),
    }
}

/// Gradients produced by one backward sweep.
pub struct TapeGrads<R: Real> {
    grads: Vec<Option<Tensor2<R>>>,
}

impl<R: Real> TapeGrads<R> {
    pub fn get(&self, id: ValueId) -> Option<&Tensor2<R>> {
        self.grads[id.0].as_ref()
    }

    /// Gradient of a value, zeros if the value did not influence the loss.
    pub fn get_or_zeros(&self, id: ValueId, tape: &Tape<R>) -> Tensor2<R> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(id).shape();
                Tensor2::zeros(r, c)
            }
        }
    }
}
