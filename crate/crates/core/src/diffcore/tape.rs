//! Operation tape for reverse-mode differentiation.
//!
//! Every primitive records its output value and its inputs. `backward` replays the
//! records in reverse order, so the tape must be built strictly forward (an operation
//! can only reference nodes created before it).

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Softplus,
    LeakyRelu { slope: f64 },
}

impl Activation {
    pub const LEAKY_RELU: Activation = Activation::LeakyRelu { slope: 0.2 };

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Softplus => softplus(x),
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Softplus => sigmoid(x),
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Linear { x: NodeId, w: NodeId, b: Option<NodeId> },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddRow { a: NodeId, row: NodeId },
    Scale(NodeId, f64),
    Act { a: NodeId, act: Activation },
    MaxPool { a: NodeId, argmax: Vec<usize> },
    MeanPool(NodeId),
    BroadcastRows(NodeId),
    ConcatCols(Vec<NodeId>),
    Square(NodeId),
    Abs(NodeId),
    Sum(NodeId),
    Mean(NodeId),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Ordered record of primitive operations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the seeded output with respect to `id`, if it was reached.
    pub fn get(&self, id: NodeId) -> Option<&Matrix> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }
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

    /// Drops every record so the tape can be reused for the next step.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value.as_slice()[0]
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Records a leaf. Non-finite values are rejected.
    pub fn leaf(&mut self, value: Matrix, requires_grad: bool) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite("leaf value contains NaN or Inf".into()));
        }
        Ok(self.push(value, Op::Leaf, requires_grad))
    }

    /// Differentiable input.
    pub fn input(&mut self, value: Matrix) -> Result<NodeId> {
        self.leaf(value, true)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Result<NodeId> {
        self.leaf(value, false)
    }

    /// `x · wᵀ + b`, with `w` stored as (out × in) and `b` as 1 × out.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: Option<NodeId>) -> Result<NodeId> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.cols() != wv.cols() {
            return Err(Error::Shape(format!(
                "linear: input has {} features, weight expects {}",
                xv.cols(),
                wv.cols()
            )));
        }
        let mut out = xv.matmul_t(wv);
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.shape() != (1, wv.rows()) {
                return Err(Error::Shape(format!(
                    "linear: bias shape {:?}, expected (1, {})",
                    bv.shape(),
                    wv.rows()
                )));
            }
            let bias = bv.as_slice().to_vec();
            for r in 0..out.rows() {
                for (o, bj) in out.row_mut(r).iter_mut().zip(&bias) {
                    *o += bj;
                }
            }
        }
        let rg = self.rg(x) || self.rg(w) || b.is_some_and(|b| self.rg(b));
        Ok(self.push(out, Op::Linear { x, w, b }, rg))
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::Shape(format!("{what}: {sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "add")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "sub")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "mul")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    /// Adds a 1 × c row to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.rows() != 1 || rv.cols() != av.cols() {
            return Err(Error::Shape(format!(
                "add_row: row shape {:?} for matrix {:?}",
                rv.shape(),
                av.shape()
            )));
        }
        let mut out = av.clone();
        let r = rv.as_slice().to_vec();
        for i in 0..out.rows() {
            for (o, v) in out.row_mut(i).iter_mut().zip(&r) {
                *o += v;
            }
        }
        let rg = self.rg(a) || self.rg(row);
        Ok(self.push(out, Op::AddRow { a, row }, rg))
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.value(a).map(|x| x * k);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, k), rg)
    }

    pub fn activation(&mut self, a: NodeId, act: Activation) -> NodeId {
        if act == Activation::Identity {
            return a;
        }
        let v = self.value(a).map(|x| act.apply(x));
        let rg = self.rg(a);
        self.push(v, Op::Act { a, act }, rg)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        self.activation(a, Activation::Softplus)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        self.activation(a, Activation::LeakyRelu { slope })
    }

    /// Column-wise maximum over the set (row) axis. Ties go to the lowest row.
    pub fn max_pool(&mut self, a: NodeId) -> Result<NodeId> {
        let av = self.value(a);
        if av.rows() == 0 {
            return Err(Error::Empty("max_pool over an empty set".into()));
        }
        let mut argmax = vec![0usize; av.cols()];
        let mut out = Matrix::row_vector(av.row(0));
        for r in 1..av.rows() {
            for (c, &v) in av.row(r).iter().enumerate() {
                if v > out.get(0, c) {
                    out.set(0, c, v);
                    argmax[c] = r;
                }
            }
        }
        let rg = self.rg(a);
        Ok(self.push(out, Op::MaxPool { a, argmax }, rg))
    }

    /// Column-wise mean over the set axis. Each column is summed in sorted order,
    /// so the result is bit-identical under any row permutation.
    pub fn mean_pool(&mut self, a: NodeId) -> Result<NodeId> {
        let av = self.value(a);
        let n = av.rows();
        if n == 0 {
            return Err(Error::Empty("mean_pool over an empty set".into()));
        }
        let mut out = Matrix::zeros(1, av.cols());
        let mut col = Vec::with_capacity(n);
        for c in 0..av.cols() {
            col.clear();
            col.extend((0..n).map(|r| av.get(r, c)));
            col.sort_unstable_by(f64::total_cmp);
            out.set(0, c, col.iter().sum::<f64>() / n as f64);
        }
        let rg = self.rg(a);
        Ok(self.push(out, Op::MeanPool(a), rg))
    }

    /// Repeats a 1 × c row `n` times.
    pub fn broadcast_rows(&mut self, a: NodeId, n: usize) -> Result<NodeId> {
        let av = self.value(a);
        if av.rows() != 1 {
            return Err(Error::Shape(format!(
                "broadcast_rows expects a single row, got {:?}",
                av.shape()
            )));
        }
        let mut data = Vec::with_capacity(n * av.cols());
        for _ in 0..n {
            data.extend_from_slice(av.as_slice());
        }
        let out = Matrix::from_vec(n, av.cols(), data)?;
        let rg = self.rg(a);
        Ok(self.push(out, Op::BroadcastRows(a), rg))
    }

    /// Concatenates along the feature axis.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let Some(&first) = parts.first() else {
            return Err(Error::Empty("concat_cols with no inputs".into()));
        };
        let rows = self.value(first).rows();
        let mut cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows() != rows {
                return Err(Error::Shape(format!("concat_cols: {} rows vs {rows}", v.rows())));
            }
            cols += v.cols();
        }
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let dst = out.row_mut(r);
            let mut off = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row(r);
                dst[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), rg))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x * x);
        let rg = self.rg(a);
        self.push(v, Op::Square(a), rg)
    }

    /// Absolute value; the subgradient at 0 is 0.
    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::abs);
        let rg = self.rg(a);
        self.push(v, Op::Abs(a), rg)
    }

    /// Sum of all entries, as 1×1.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).as_slice().iter().sum::<f64>();
        let rg = self.rg(a);
        self.push(Matrix::filled(1, 1, s), Op::Sum(a), rg)
    }

    /// Mean of all entries, as 1×1.
    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let av = self.value(a);
        if av.is_empty() {
            return Err(Error::Empty("mean of an empty matrix".into()));
        }
        let s = av.as_slice().iter().sum::<f64>() / av.len() as f64;
        let rg = self.rg(a);
        Ok(self.push(Matrix::filled(1, 1, s), Op::Mean(a), rg))
    }

    /// Backward pass seeded with `seed = ∂L/∂output`.
    ///
    /// A tape can be replayed once; call [`Tape::clear`] before recording the next step.
    pub fn backward(&mut self, output: NodeId, seed: &Matrix) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if output.0 >= self.nodes.len() {
            return Err(Error::InvalidArgument(format!("node {} not on this tape", output.0)));
        }
        if self.value(output).shape() != seed.shape() {
            return Err(Error::Shape(format!(
                "output gradient {:?} for output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        if !seed.is_finite() {
            return Err(Error::NonFinite("output gradient".into()));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Matrix>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[output.0] = Some(seed.clone());

        for idx in (0..=output.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    /// Backward pass from a 1×1 output with unit seed.
    pub fn backward_scalar(&mut self, output: NodeId) -> Result<Gradients> {
        self.backward(output, &Matrix::filled(1, 1, 1.0))
    }

    fn propagate(&self, idx: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[idx];
        let nodes = &self.nodes;
        let mut acc = |id: NodeId, delta: Matrix| {
            if !nodes[id.0].requires_grad {
                return;
            }
            match &mut grads[id.0] {
                Some(existing) => existing.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Linear { x, w, b } => {
                if nodes[x.0].requires_grad {
                    acc(*x, g.matmul(&nodes[w.0].value));
                }
                if nodes[w.0].requires_grad {
                    acc(*w, g.t_matmul(&nodes[x.0].value));
                }
                if let Some(b) = b {
                    if nodes[b.0].requires_grad {
                        acc(*b, g.column_sums());
                    }
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                if nodes[a.0].requires_grad {
                    acc(*a, g.zip_map(&nodes[b.0].value, |gv, bv| gv * bv));
                }
                if nodes[b.0].requires_grad {
                    acc(*b, g.zip_map(&nodes[a.0].value, |gv, av| gv * av));
                }
            }
            Op::AddRow { a, row } => {
                acc(*a, g.clone());
                if nodes[row.0].requires_grad {
                    acc(*row, g.column_sums());
                }
            }
            Op::Scale(a, k) => acc(*a, g.map(|v| v * k)),
            Op::Act { a, act } => {
                let x = &nodes[a.0].value;
                acc(*a, g.zip_map(x, |gv, xv| gv * act.derivative(xv)));
            }
            Op::MaxPool { a, argmax } => {
                let src = &nodes[a.0].value;
                let mut d = Matrix::zeros(src.rows(), src.cols());
                for (c, &r) in argmax.iter().enumerate() {
                    d.set(r, c, g.get(0, c));
                }
                acc(*a, d);
            }
            Op::MeanPool(a) => {
                let src = &nodes[a.0].value;
                let n = src.rows() as f64;
                let row: Vec<f64> = g.as_slice().iter().map(|v| v / n).collect();
                let mut d = Matrix::zeros(src.rows(), src.cols());
                for r in 0..src.rows() {
                    d.row_mut(r).copy_from_slice(&row);
                }
                acc(*a, d);
            }
            Op::BroadcastRows(a) => acc(*a, g.column_sums()),
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let pc = nodes[p.0].value.cols();
                    if nodes[p.0].requires_grad {
                        let mut d = Matrix::zeros(g.rows(), pc);
                        for r in 0..g.rows() {
                            d.row_mut(r).copy_from_slice(&g.row(r)[off..off + pc]);
                        }
                        acc(*p, d);
                    }
                    off += pc;
                }
            }
            Op::Square(a) => acc(*a, g.zip_map(&nodes[a.0].value, |gv, xv| 2.0 * gv * xv)),
            Op::Abs(a) => acc(
                *a,
                g.zip_map(&nodes[a.0].value, |gv, xv| {
                    if xv > 0.0 {
                        gv
                    } else if xv < 0.0 {
                        -gv
                    } else {
                        0.0
                    }
                }),
            ),
            Op::Sum(a) => {
                let src = &nodes[a.0].value;
                acc(*a, Matrix::filled(src.rows(), src.cols(), g.get(0, 0)));
            }
            Op::Mean(a) => {
                let src = &nodes[a.0].value;
                let v = g.get(0, 0) / src.len() as f64;
                acc(*a, Matrix::filled(src.rows(), src.cols(), v));
            }
        }
    }
}
