//! Reverse-mode differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Tensors are
//! lightweight handles into the tape; values and gradients live on the tape
//! itself. Everything is two-dimensional: vectors are `1×q` rows or `n×1`
//! columns and scalars are `1×1`.
//!
//! ```
//! use grail::autodiff::Tape;
//! use ndarray::array;
//!
//! let mut tape = Tape::new();
//! let x = tape.leaf(array![[1.0, 2.0, 3.0]], true).unwrap();
//! let sq = tape.mul(x, x).unwrap();
//! let loss = tape.sum(sq);
//! tape.backward(loss).unwrap();
//! assert_eq!(tape.grad(x).unwrap(), &array![[2.0, 4.0, 6.0]]);
//! ```

use ndarray::{Array2, Axis, Zip};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("backward requires a 1x1 loss, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("leaf tensor contains non-finite values")]
    NonFinite,
    #[error("weighted adjacency is not symmetric")]
    AsymmetricAdjacency,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, AutodiffError>;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tensor(usize);

impl Tensor {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Tensor, Tensor),
    Add(Tensor, Tensor),
    Sub(Tensor, Tensor),
    Mul(Tensor, Tensor),
    AddRow(Tensor, Tensor),
    MulRow(Tensor, Tensor),
    ScaleRows(Tensor, Tensor),
    Scale(Tensor, f64),
    AddScalar(Tensor),
    Powf(Tensor, f64),
    Relu(Tensor),
    Prelu(Tensor, Tensor),
    Sigmoid(Tensor),
    Softplus(Tensor),
    Tanh(Tensor),
    Log(Tensor),
    Exp(Tensor),
    Sum(Tensor),
    SumAxis(Tensor, Axis),
    Concat(Vec<Tensor>, Axis),
    RowIndex(Tensor, Vec<usize>),
    Transpose(Tensor),
    ScatterSymmetric(Tensor, Vec<(usize, usize)>),
    LogSoftmaxRows(Tensor),
    MaskedLogSumExpRows(Tensor, Array2<bool>),
    PickPerRow(Tensor, Vec<usize>),
    MarginRows(Tensor, Vec<usize>, Vec<usize>),
}

struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

/// Wengert list for one forward pass. Tapes are not reused across passes.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Array2<f64>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Tensor {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Tensor(self.nodes.len() - 1)
    }

    fn rg(&self, t: Tensor) -> bool {
        self.nodes[t.0].requires_grad
    }

    /// Registers an input. Non-finite values are rejected.
    pub fn leaf(&mut self, value: Array2<f64>, requires_grad: bool) -> Result<Tensor> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFinite);
        }
        Ok(self.push(value, Op::Leaf, requires_grad))
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Result<Tensor> {
        self.leaf(value, false)
    }

    pub fn value(&self, t: Tensor) -> &Array2<f64> {
        &self.nodes[t.0].value
    }

    pub fn shape(&self, t: Tensor) -> (usize, usize) {
        self.nodes[t.0].value.dim()
    }

    /// Value of a `1×1` tensor.
    pub fn scalar(&self, t: Tensor) -> f64 {
        self.nodes[t.0].value[[0, 0]]
    }

    pub fn requires_grad(&self, t: Tensor) -> bool {
        self.rg(t)
    }

    fn same_shape(&self, op: &'static str, a: Tensor, b: Tensor) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(AutodiffError::ShapeMismatch {
                op,
                lhs: sa,
                rhs: sb,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let v = self.value(a).dot(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::MatMul(a, b), rg))
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("add", a, b)?;
        let v = self.value(a) + self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a) - self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a) * self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    /// `a (m×n) + row (1×n)` broadcast over rows, e.g. a bias.
    pub fn add_row(&mut self, a: Tensor, row: Tensor) -> Result<Tensor> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                lhs: sa,
                rhs: sr,
            });
        }
        let v = self.value(a) + self.value(row);
        let rg = self.rg(a) || self.rg(row);
        Ok(self.push(v, Op::AddRow(a, row), rg))
    }

    /// `a (m×n) ∘ row (1×n)`: scales column `j` by `row[j]`.
    pub fn mul_row(&mut self, a: Tensor, row: Tensor) -> Result<Tensor> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "mul_row",
                lhs: sa,
                rhs: sr,
            });
        }
        let v = self.value(a) * self.value(row);
        let rg = self.rg(a) || self.rg(row);
        Ok(self.push(v, Op::MulRow(a, row), rg))
    }

    /// `a (m×n) ∘ col (m×1)`: scales row `i` by `col[i]`.
    pub fn scale_rows(&mut self, a: Tensor, col: Tensor) -> Result<Tensor> {
        let (sa, sc) = (self.shape(a), self.shape(col));
        if sc.1 != 1 || sc.0 != sa.0 {
            return Err(AutodiffError::ShapeMismatch {
                op: "scale_rows",
                lhs: sa,
                rhs: sc,
            });
        }
        let v = self.value(a) * self.value(col);
        let rg = self.rg(a) || self.rg(col);
        Ok(self.push(v, Op::ScaleRows(a, col), rg))
    }

    pub fn scale(&mut self, a: Tensor, k: f64) -> Tensor {
        let v = self.value(a) * k;
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, k), rg)
    }

    pub fn neg(&mut self, a: Tensor) -> Tensor {
        self.scale(a, -1.0)
    }

    pub fn add_scalar(&mut self, a: Tensor, k: f64) -> Tensor {
        let v = self.value(a) + k;
        let rg = self.rg(a);
        self.push(v, Op::AddScalar(a), rg)
    }

    pub fn powf(&mut self, a: Tensor, p: f64) -> Tensor {
        let v = self.value(a).mapv(|x| x.powf(p));
        let rg = self.rg(a);
        self.push(v, Op::Powf(a, p), rg)
    }

    pub fn relu(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).mapv(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(v, Op::Relu(a), rg)
    }

    /// Parametric ReLU with one learnable slope per column (`alpha` is `1×n`).
    pub fn prelu(&mut self, a: Tensor, alpha: Tensor) -> Result<Tensor> {
        let (sa, sr) = (self.shape(a), self.shape(alpha));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "prelu",
                lhs: sa,
                rhs: sr,
            });
        }
        let mut v = self.value(a).clone();
        let al = self.value(alpha);
        Zip::from(v.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row).and(al.row(0)).for_each(|x, &s| {
                if *x < 0.0 {
                    *x *= s;
                }
            });
        });
        let rg = self.rg(a) || self.rg(alpha);
        Ok(self.push(v, Op::Prelu(a, alpha), rg))
    }

    pub fn sigmoid(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).mapv(sigmoid);
        let rg = self.rg(a);
        self.push(v, Op::Sigmoid(a), rg)
    }

    pub fn softplus(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).mapv(softplus);
        let rg = self.rg(a);
        self.push(v, Op::Softplus(a), rg)
    }

    pub fn tanh(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).mapv(f64::tanh);
        let rg = self.rg(a);
        self.push(v, Op::Tanh(a), rg)
    }

    pub fn log(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).mapv(f64::ln);
        let rg = self.rg(a);
        self.push(v, Op::Log(a), rg)
    }

    pub fn exp(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).mapv(f64::exp);
        let rg = self.rg(a);
        self.push(v, Op::Exp(a), rg)
    }

    /// Sum of all entries, as a `1×1` tensor.
    pub fn sum(&mut self, a: Tensor) -> Tensor {
        let v = Array2::from_elem((1, 1), self.value(a).sum());
        let rg = self.rg(a);
        self.push(v, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Tensor) -> Tensor {
        let count = self.value(a).len().max(1) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / count)
    }

    /// `Axis(0)` collapses rows into a `1×n` row, `Axis(1)` collapses columns
    /// into an `m×1` column.
    pub fn sum_axis(&mut self, a: Tensor, axis: Axis) -> Tensor {
        let s = self.value(a).sum_axis(axis);
        let v = match axis.index() {
            0 => s.insert_axis(Axis(0)),
            _ => s.insert_axis(Axis(1)),
        };
        let rg = self.rg(a);
        self.push(v, Op::SumAxis(a, axis), rg)
    }

    pub fn mean_axis(&mut self, a: Tensor, axis: Axis) -> Tensor {
        let count = self.value(a).len_of(axis).max(1) as f64;
        let s = self.sum_axis(a, axis);
        self.scale(s, 1.0 / count)
    }

    pub fn concat(&mut self, parts: &[Tensor], axis: Axis) -> Result<Tensor> {
        let first = *parts.first().ok_or(AutodiffError::ShapeMismatch {
            op: "concat",
            lhs: (0, 0),
            rhs: (0, 0),
        })?;
        let other = 1 - axis.index();
        let s0 = self.shape(first);
        let keep = if other == 0 { s0.0 } else { s0.1 };
        for &p in &parts[1..] {
            let sp = self.shape(p);
            let kp = if other == 0 { sp.0 } else { sp.1 };
            if kp != keep {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat",
                    lhs: s0,
                    rhs: sp,
                });
            }
        }
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let v = ndarray::concatenate(axis, &views).expect("checked shapes");
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(v, Op::Concat(parts.to_vec(), axis), rg))
    }

    /// Gathers rows `idx` of `a` (repeats allowed).
    pub fn row_index(&mut self, a: Tensor, idx: &[usize]) -> Result<Tensor> {
        let rows = self.shape(a).0;
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(AutodiffError::IndexOutOfRange {
                index: bad,
                len: rows,
            });
        }
        let v = self.value(a).select(Axis(0), idx);
        let rg = self.rg(a);
        Ok(self.push(v, Op::RowIndex(a, idx.to_vec()), rg))
    }

    pub fn transpose(&mut self, a: Tensor) -> Tensor {
        let v = self.value(a).t().to_owned();
        let rg = self.rg(a);
        self.push(v, Op::Transpose(a), rg)
    }

    /// Builds an `n×n` symmetric matrix with `out[i,j] = out[j,i] = w[e]` for
    /// each pair `e = (i, j)` from an `m×1` weight column.
    pub fn scatter_symmetric(
        &mut self,
        w: Tensor,
        pairs: &[(usize, usize)],
        n: usize,
    ) -> Result<Tensor> {
        let sw = self.shape(w);
        if sw != (pairs.len(), 1) {
            return Err(AutodiffError::ShapeMismatch {
                op: "scatter_symmetric",
                lhs: sw,
                rhs: (pairs.len(), 1),
            });
        }
        let mut v = Array2::zeros((n, n));
        {
            let wv = self.value(w);
            for (e, &(i, j)) in pairs.iter().enumerate() {
                if i >= n || j >= n {
                    return Err(AutodiffError::IndexOutOfRange {
                        index: i.max(j),
                        len: n,
                    });
                }
                v[[i, j]] += wv[[e, 0]];
                if i != j {
                    v[[j, i]] += wv[[e, 0]];
                }
            }
        }
        let rg = self.rg(w);
        Ok(self.push(v, Op::ScatterSymmetric(w, pairs.to_vec()), rg))
    }

    /// Row-wise `x - logsumexp(x)` with max subtraction.
    pub fn log_softmax_rows(&mut self, a: Tensor) -> Tensor {
        let mut v = self.value(a).clone();
        for mut row in v.rows_mut() {
            let m = row.fold(f64::NEG_INFINITY, |acc, &x| acc.max(x));
            let lse = m + row.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
            row.mapv_inplace(|x| x - lse);
        }
        let rg = self.rg(a);
        self.push(v, Op::LogSoftmaxRows(a), rg)
    }

    /// Row-wise log-sum-exp restricted to entries where `mask` is true.
    /// Every row must select at least one entry. Output is `m×1`.
    pub fn masked_logsumexp_rows(&mut self, a: Tensor, mask: Array2<bool>) -> Result<Tensor> {
        let sa = self.shape(a);
        if mask.dim() != sa {
            return Err(AutodiffError::ShapeMismatch {
                op: "masked_logsumexp_rows",
                lhs: sa,
                rhs: mask.dim(),
            });
        }
        let x = self.value(a);
        let mut v = Array2::zeros((sa.0, 1));
        for (i, (row, mrow)) in x.rows().into_iter().zip(mask.rows()).enumerate() {
            let m = row
                .iter()
                .zip(mrow.iter())
                .filter(|(_, &k)| k)
                .fold(f64::NEG_INFINITY, |acc, (&x, _)| acc.max(x));
            if m == f64::NEG_INFINITY {
                return Err(AutodiffError::ShapeMismatch {
                    op: "masked_logsumexp_rows (empty row)",
                    lhs: sa,
                    rhs: (i, 0),
                });
            }
            let s: f64 = row
                .iter()
                .zip(mrow.iter())
                .filter(|(_, &k)| k)
                .map(|(&x, _)| (x - m).exp())
                .sum();
            v[[i, 0]] = m + s.ln();
        }
        let rg = self.rg(a);
        Ok(self.push(v, Op::MaskedLogSumExpRows(a, mask), rg))
    }

    /// `out[i] = a[i, idx[i]]`, an `m×1` column.
    pub fn pick_per_row(&mut self, a: Tensor, idx: &[usize]) -> Result<Tensor> {
        let (m, n) = self.shape(a);
        if idx.len() != m {
            return Err(AutodiffError::ShapeMismatch {
                op: "pick_per_row",
                lhs: (m, n),
                rhs: (idx.len(), 1),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&j| j >= n) {
            return Err(AutodiffError::IndexOutOfRange { index: bad, len: n });
        }
        let x = self.value(a);
        let v = Array2::from_shape_fn((m, 1), |(i, _)| x[[i, idx[i]]]);
        let rg = self.rg(a);
        Ok(self.push(v, Op::PickPerRow(a, idx.to_vec()), rg))
    }

    /// `out[i] = a[i, y_i] - max_{j != y_i} a[i, j]` (ties to the lowest index).
    pub fn margin_rows(&mut self, a: Tensor, labels: &[usize]) -> Result<Tensor> {
        let (m, n) = self.shape(a);
        if labels.len() != m || n < 2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "margin_rows",
                lhs: (m, n),
                rhs: (labels.len(), 2),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&j| j >= n) {
            return Err(AutodiffError::IndexOutOfRange { index: bad, len: n });
        }
        let x = self.value(a);
        let mut best = Vec::with_capacity(m);
        let v = Array2::from_shape_fn((m, 1), |(i, _)| {
            let y = labels[i];
            let mut arg = if y == 0 { 1 } else { 0 };
            for j in 0..n {
                if j != y && x[[i, j]] > x[[i, arg]] {
                    arg = j;
                }
            }
            best.push(arg);
            x[[i, y]] - x[[i, arg]]
        });
        let rg = self.rg(a);
        Ok(self.push(v, Op::MarginRows(a, labels.to_vec(), best), rg))
    }

    /// `W·H` for a symmetric weighted adjacency `W`.
    pub fn weighted_message_pass(&mut self, w: Tensor, h: Tensor) -> Result<Tensor> {
        let wv = self.value(w);
        let (r, c) = wv.dim();
        if r != c {
            return Err(AutodiffError::ShapeMismatch {
                op: "weighted_message_pass",
                lhs: (r, c),
                rhs: self.shape(h),
            });
        }
        for i in 0..r {
            for j in (i + 1)..r {
                if wv[[i, j]] != wv[[j, i]] {
                    return Err(AutodiffError::AsymmetricAdjacency);
                }
            }
        }
        self.matmul(w, h)
    }

    /// Reverse pass from a `1×1` loss. Every leaf that requires a gradient
    /// receives one (zeros when unreachable from `loss`).
    pub fn backward(&mut self, loss: Tensor) -> Result<()> {
        let s = self.shape(loss);
        if s != (1, 1) {
            return Err(AutodiffError::NonScalarLoss(s));
        }
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));
        for id in (0..=loss.0).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            if matches!(self.nodes[id].op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            self.propagate(id, &g, &mut grads);
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && grads[id].is_none() {
                grads[id] = Some(Array2::zeros(node.value.dim()));
            }
        }
        self.grads = grads;
        Ok(())
    }

    /// Gradient of the last `backward` loss with respect to a leaf.
    pub fn grad(&self, t: Tensor) -> Option<&Array2<f64>> {
        self.grads.get(t.0).and_then(|g| g.as_ref())
    }

    /// Gradient of a symmetric matrix leaf reported as `(g + gᵀ)/2`.
    pub fn symmetrized_grad(&self, t: Tensor) -> Option<Array2<f64>> {
        self.grad(t).map(|g| (g + &g.t()) * 0.5)
    }

    fn accumulate(&self, grads: &mut [Option<Array2<f64>>], t: Tensor, g: Array2<f64>) {
        if !self.nodes[t.0].requires_grad {
            return;
        }
        match &mut grads[t.0] {
            Some(acc) => *acc += &g,
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, id: usize, g: &Array2<f64>, grads: &mut [Option<Array2<f64>>]) {
        let node = &self.nodes[id];
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    let ga = g.dot(&self.value(*b).t());
                    self.accumulate(grads, *a, ga);
                }
                if self.rg(*b) {
                    let gb = self.value(*a).t().dot(g);
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, -g);
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g * self.value(*b));
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, g * self.value(*a));
                }
            }
            Op::AddRow(a, row) => {
                self.accumulate(grads, *a, g.clone());
                if self.rg(*row) {
                    let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.accumulate(grads, *row, gr);
                }
            }
            Op::MulRow(a, row) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g * self.value(*row));
                }
                if self.rg(*row) {
                    let gr = (g * self.value(*a)).sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.accumulate(grads, *row, gr);
                }
            }
            Op::ScaleRows(a, col) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g * self.value(*col));
                }
                if self.rg(*col) {
                    let gc = (g * self.value(*a)).sum_axis(Axis(1)).insert_axis(Axis(1));
                    self.accumulate(grads, *col, gc);
                }
            }
            Op::Scale(a, k) => self.accumulate(grads, *a, g * *k),
            Op::AddScalar(a) => self.accumulate(grads, *a, g.clone()),
            Op::Powf(a, p) => {
                let x = self.value(*a);
                let mut ga = g.clone();
                Zip::from(&mut ga)
                    .and(x)
                    .for_each(|gv, &xv| *gv *= p * xv.powf(p - 1.0));
                self.accumulate(grads, *a, ga);
            }
            Op::Relu(a) => {
                let mut ga = g.clone();
                Zip::from(&mut ga).and(self.value(*a)).for_each(|gv, &xv| {
                    if xv <= 0.0 {
                        *gv = 0.0;
                    }
                });
                self.accumulate(grads, *a, ga);
            }
            Op::Prelu(a, alpha) => {
                let x = self.value(*a);
                let al = self.value(*alpha);
                if self.rg(*a) {
                    let mut ga = g.clone();
                    Zip::from(ga.rows_mut()).and(x.rows()).for_each(|mut gr, xr| {
                        Zip::from(&mut gr)
                            .and(xr)
                            .and(al.row(0))
                            .for_each(|gv, &xv, &s| {
                                if xv < 0.0 {
                                    *gv *= s;
                                }
                            });
                    });
                    self.accumulate(grads, *a, ga);
                }
                if self.rg(*alpha) {
                    let mut gal = Array2::zeros(al.dim());
                    for (gr, xr) in g.rows().into_iter().zip(x.rows()) {
                        for (j, (&gv, &xv)) in gr.iter().zip(xr.iter()).enumerate() {
                            if xv < 0.0 {
                                gal[[0, j]] += gv * xv;
                            }
                        }
                    }
                    self.accumulate(grads, *alpha, gal);
                }
            }
            Op::Sigmoid(a) => {
                let mut ga = g.clone();
                Zip::from(&mut ga)
                    .and(out)
                    .for_each(|gv, &s| *gv *= s * (1.0 - s));
                self.accumulate(grads, *a, ga);
            }
            Op::Softplus(a) => {
                let mut ga = g.clone();
                Zip::from(&mut ga)
                    .and(self.value(*a))
                    .for_each(|gv, &xv| *gv *= sigmoid(xv));
                self.accumulate(grads, *a, ga);
            }
            Op::Tanh(a) => {
                let mut ga = g.clone();
                Zip::from(&mut ga)
                    .and(out)
                    .for_each(|gv, &t| *gv *= 1.0 - t * t);
                self.accumulate(grads, *a, ga);
            }
            Op::Log(a) => self.accumulate(grads, *a, g / self.value(*a)),
            Op::Exp(a) => self.accumulate(grads, *a, g * out),
            Op::Sum(a) => {
                let ga = Array2::from_elem(self.shape(*a), g[[0, 0]]);
                self.accumulate(grads, *a, ga);
            }
            Op::SumAxis(a, axis) => {
                let sa = self.shape(*a);
                let ga = match axis.index() {
                    0 => g.broadcast(sa).expect("row broadcast").to_owned(),
                    _ => g.broadcast(sa).expect("column broadcast").to_owned(),
                };
                self.accumulate(grads, *a, ga);
            }
            Op::Concat(parts, axis) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len_of(*axis);
                    if self.rg(p) {
                        let gp = g
                            .slice_axis(*axis, ndarray::Slice::from(offset..offset + len))
                            .to_owned();
                        self.accumulate(grads, p, gp);
                    }
                    offset += len;
                }
            }
            Op::RowIndex(a, idx) => {
                let mut ga = Array2::zeros(self.shape(*a));
                for (r, &i) in idx.iter().enumerate() {
                    let mut dst = ga.row_mut(i);
                    dst += &g.row(r);
                }
                self.accumulate(grads, *a, ga);
            }
            Op::Transpose(a) => self.accumulate(grads, *a, g.t().to_owned()),
            Op::ScatterSymmetric(w, pairs) => {
                let mut gw = Array2::zeros((pairs.len(), 1));
                for (e, &(i, j)) in pairs.iter().enumerate() {
                    gw[[e, 0]] = if i == j {
                        g[[i, j]]
                    } else {
                        g[[i, j]] + g[[j, i]]
                    };
                }
                self.accumulate(grads, *w, gw);
            }
            Op::LogSoftmaxRows(a) => {
                let mut ga = g.clone();
                for (mut gr, yr) in ga.rows_mut().into_iter().zip(out.rows()) {
                    let total: f64 = gr.sum();
                    Zip::from(&mut gr)
                        .and(yr)
                        .for_each(|gv, &y| *gv -= y.exp() * total);
                }
                self.accumulate(grads, *a, ga);
            }
            Op::MaskedLogSumExpRows(a, mask) => {
                let x = self.value(*a);
                let mut ga = Array2::zeros(x.dim());
                for i in 0..x.nrows() {
                    let lse = out[[i, 0]];
                    for j in 0..x.ncols() {
                        if mask[[i, j]] {
                            ga[[i, j]] = g[[i, 0]] * (x[[i, j]] - lse).exp();
                        }
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::PickPerRow(a, idx) => {
                let mut ga = Array2::zeros(self.shape(*a));
                for (i, &j) in idx.iter().enumerate() {
                    ga[[i, j]] = g[[i, 0]];
                }
                self.accumulate(grads, *a, ga);
            }
            Op::MarginRows(a, labels, best) => {
                let mut ga = Array2::zeros(self.shape(*a));
                for i in 0..labels.len() {
                    ga[[i, labels[i]]] += g[[i, 0]];
                    ga[[i, best[i]]] -= g[[i, 0]];
                }
                self.accumulate(grads, *a, ga);
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Identity matrix helper used by normalization code.
pub fn identity(n: usize) -> Array2<f64> {
    Array2::eye(n)
}
