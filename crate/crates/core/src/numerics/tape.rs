//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation on a [`Var`] appends one record to its [`Tape`]. Records
//! are only ever appended, so the tape is topologically ordered by
//! construction and [`Tape::backward`] is a single reverse sweep.

use std::cell::{Ref, RefCell};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Elementwise non-linearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the input `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::config(format!("unknown activation kind `{other}`"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        };
        f.write_str(s)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Abs(usize),
    Activation(usize, Activation),
    SoftmaxRows(usize),
    Transpose(usize),
    ConcatCols(Vec<usize>),
    ConcatRows(Vec<usize>),
    Sum(usize),
    Mean(usize),
    MeanOverRows(usize),
    MeanOverCols(usize),
    BroadcastRows(usize),
    RowNormalize(usize),
    SymLaplacian(usize),
    StraightThrough(usize),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of operations. One tape per forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("value", &*self.value_ref())
            .finish()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by tape position.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<[usize; 2]>,
}

impl Gradients {
    /// Gradient with respect to `var`; zeros when `var` does not reach the loss.
    pub fn wrt(&self, var: Var<'_>) -> Tensor {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => {
                let [r, c] = self.shapes[var.id];
                Tensor::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Records a trainable leaf.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Records a leaf that never receives gradient.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    fn push(&self, value: Tensor, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn needs_grad(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].requires_grad)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let shapes: Vec<[usize; 2]> = nodes.iter().map(|n| n.value.shape()).collect();
        if shapes[loss.id] != [1, 1] {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                shapes[loss.id]
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.requires_grad {
                grads[id] = Some(g);
                continue;
            }
            let mut acc = |target: usize, delta: Tensor| {
                if !nodes[target].requires_grad {
                    return;
                }
                match &mut grads[target] {
                    Some(existing) => existing.add_assign(&delta),
                    slot @ None => *slot = Some(delta),
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let av = &nodes[*a].value;
                    let bv = &nodes[*b].value;
                    if nodes[*a].requires_grad {
                        acc(*a, g.matmul(&bv.transpose())?);
                    }
                    if nodes[*b].requires_grad {
                        acc(*b, av.transpose().matmul(&g)?);
                    }
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.clone());
                }
                Op::AddRow(a, row) => {
                    acc(*a, g.clone());
                    acc(*row, column_sums(&g));
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.scale(-1.0));
                }
                Op::Mul(a, b) => {
                    let av = &nodes[*a].value;
                    let bv = &nodes[*b].value;
                    acc(*a, g.zip_with(bv, "mul", |x, y| x * y)?);
                    acc(*b, g.zip_with(av, "mul", |x, y| x * y)?);
                }
                Op::Scale(a, s) => acc(*a, g.scale(*s)),
                Op::Abs(a) => {
                    let x = &nodes[*a].value;
                    acc(
                        *a,
                        g.zip_with(x, "abs", |g, x| {
                            if x > 0.0 {
                                g
                            } else if x < 0.0 {
                                -g
                            } else {
                                0.0
                            }
                        })?,
                    )
                }
                Op::Activation(a, kind) => {
                    let x = &nodes[*a].value;
                    let y = &node.value;
                    let data = g
                        .data()
                        .iter()
                        .zip(x.data().iter().zip(y.data()))
                        .map(|(&gi, (&xi, &yi))| gi * kind.derivative(xi, yi))
                        .collect();
                    acc(*a, Tensor::new(g.rows(), g.cols(), data)?);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut out = Tensor::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let yr = y.row(i);
                        let gr = g.row(i);
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..y.cols() {
                            out.set(i, j, yr[j] * (gr[j] - dot));
                        }
                    }
                    acc(*a, out);
                }
                Op::Transpose(a) => acc(*a, g.transpose()),
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = nodes[p].value.cols();
                        let piece = Tensor::from_fn(g.rows(), w, |i, j| g.get(i, offset + j));
                        acc(p, piece);
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let h = nodes[p].value.rows();
                        let piece = Tensor::from_fn(h, g.cols(), |i, j| g.get(offset + i, j));
                        acc(p, piece);
                        offset += h;
                    }
                }
                Op::Sum(a) => {
                    let [r, c] = shapes[*a];
                    acc(*a, Tensor::filled(r, c, g.item()));
                }
                Op::Mean(a) => {
                    let [r, c] = shapes[*a];
                    acc(*a, Tensor::filled(r, c, g.item() / (r * c) as f64));
                }
                Op::MeanOverRows(a) => {
                    let [r, c] = shapes[*a];
                    acc(*a, Tensor::from_fn(r, c, |_, j| g.get(0, j) / r as f64));
                }
                Op::MeanOverCols(a) => {
                    let [r, c] = shapes[*a];
                    acc(*a, Tensor::from_fn(r, c, |i, _| g.get(i, 0) / c as f64));
                }
                Op::BroadcastRows(a) => acc(*a, column_sums(&g)),
                Op::RowNormalize(a) => {
                    let adj = with_isolated_self_loops(&nodes[*a].value);
                    let y = &node.value;
                    let n = adj.rows();
                    let mut out = Tensor::zeros(n, n);
                    for i in 0..n {
                        let s: f64 = adj.row(i).iter().sum();
                        let dot: f64 = g.row(i).iter().zip(y.row(i)).map(|(a, b)| a * b).sum();
                        for j in 0..n {
                            out.set(i, j, (g.get(i, j) - dot) / s);
                        }
                    }
                    acc(*a, out);
                }
                Op::SymLaplacian(a) => {
                    let adj = with_isolated_self_loops(&nodes[*a].value);
                    let n = adj.rows();
                    let deg: Vec<f64> = (0..n).map(|i| adj.row(i).iter().sum()).collect();
                    let d: Vec<f64> = deg.iter().map(|s| 1.0 / s.sqrt()).collect();
                    // Row and column contractions that feed the degree terms.
                    let mut through = vec![0.0; n];
                    for k in 0..n {
                        let mut row_part = 0.0;
                        let mut col_part = 0.0;
                        for j in 0..n {
                            row_part += g.get(k, j) * adj.get(k, j) * d[j];
                            col_part += g.get(j, k) * adj.get(j, k) * d[j];
                        }
                        through[k] = 0.5 * d[k].powi(3) * (row_part + col_part);
                    }
                    let out = Tensor::from_fn(n, n, |k, l| -g.get(k, l) * d[k] * d[l] + through[k]);
                    acc(*a, out);
                }
                Op::StraightThrough(soft) => acc(*soft, g.clone()),
            }
            grads[id] = Some(g);
        }
        grads.resize(nodes.len(), None);
        Ok(Gradients { grads, shapes })
    }
}

fn column_sums(g: &Tensor) -> Tensor {
    let mut out = vec![0.0; g.cols()];
    for i in 0..g.rows() {
        for (o, v) in out.iter_mut().zip(g.row(i)) {
            *o += v;
        }
    }
    Tensor::row_vector(&out)
}

/// Gives every zero-degree row a unit self-loop so the degree matrix is invertible.
pub(crate) fn with_isolated_self_loops(adj: &Tensor) -> Tensor {
    let mut out = adj.clone();
    for i in 0..adj.rows() {
        if adj.row(i).iter().sum::<f64>() == 0.0 {
            out.set(i, i, 1.0);
        }
    }
    out
}

fn check_square(op: &'static str, t: &Tensor) -> Result<()> {
    if t.rows() != t.cols() {
        return Err(Error::Shape {
            op,
            left: t.shape(),
            right: [t.cols(), t.rows()],
        });
    }
    Ok(())
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value_ref(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    pub fn value(&self) -> Tensor {
        self.value_ref().clone()
    }

    pub fn shape(&self) -> [usize; 2] {
        self.value_ref().shape()
    }

    pub fn item(&self) -> f64 {
        self.value_ref().item()
    }

    fn derived(&self, value: Tensor, op: Op, inputs: &[usize]) -> Var<'t> {
        let rg = self.tape.needs_grad(inputs);
        self.tape.push(value, op, rg)
    }

    pub fn matmul(&self, other: Var<'t>) -> Result<Var<'t>> {
        let v = self.value_ref().matmul(&other.value_ref())?;
        Ok(self.derived(v, Op::MatMul(self.id, other.id), &[self.id, other.id]))
    }

    pub fn add(&self, other: Var<'t>) -> Result<Var<'t>> {
        let v = self.value_ref().add(&other.value_ref())?;
        Ok(self.derived(v, Op::Add(self.id, other.id), &[self.id, other.id]))
    }

    /// Adds a `1×c` row to every row of `self`.
    pub fn add_row(&self, row: Var<'t>) -> Result<Var<'t>> {
        let v = {
            let a = self.value_ref();
            let r = row.value_ref();
            if r.rows() != 1 || r.cols() != a.cols() {
                return Err(Error::Shape {
                    op: "add_row",
                    left: a.shape(),
                    right: r.shape(),
                });
            }
            Tensor::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + r.get(0, j))
        };
        Ok(self.derived(v, Op::AddRow(self.id, row.id), &[self.id, row.id]))
    }

    pub fn sub(&self, other: Var<'t>) -> Result<Var<'t>> {
        let v = self.value_ref().sub(&other.value_ref())?;
        Ok(self.derived(v, Op::Sub(self.id, other.id), &[self.id, other.id]))
    }

    /// Elementwise product.
    pub fn mul(&self, other: Var<'t>) -> Result<Var<'t>> {
        let v = self.value_ref().zip_with(&other.value_ref(), "mul", |a, b| a * b)?;
        Ok(self.derived(v, Op::Mul(self.id, other.id), &[self.id, other.id]))
    }

    pub fn scale(&self, s: f64) -> Var<'t> {
        let v = self.value_ref().scale(s);
        self.derived(v, Op::Scale(self.id, s), &[self.id])
    }

    /// Subgradient 0 at 0.
    pub fn abs(&self) -> Var<'t> {
        let v = self.value_ref().map(f64::abs);
        self.derived(v, Op::Abs(self.id), &[self.id])
    }

    pub fn square(&self) -> Var<'t> {
        self.mul(*self).expect("same shape")
    }

    pub fn activation(&self, kind: Activation) -> Var<'t> {
        let v = self.value_ref().map(|x| kind.apply(x));
        self.derived(v, Op::Activation(self.id, kind), &[self.id])
    }

    pub fn sigmoid(&self) -> Var<'t> {
        self.activation(Activation::Sigmoid)
    }

    pub fn tanh(&self) -> Var<'t> {
        self.activation(Activation::Tanh)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&self) -> Var<'t> {
        let v = softmax_rows(&self.value_ref());
        self.derived(v, Op::SoftmaxRows(self.id), &[self.id])
    }

    pub fn transpose(&self) -> Var<'t> {
        let v = self.value_ref().transpose();
        self.derived(v, Op::Transpose(self.id), &[self.id])
    }

    pub fn sum(&self) -> Var<'t> {
        let v = Tensor::scalar(self.value_ref().sum());
        self.derived(v, Op::Sum(self.id), &[self.id])
    }

    pub fn mean(&self) -> Var<'t> {
        let t = self.value_ref();
        let v = Tensor::scalar(t.sum() / t.len() as f64);
        drop(t);
        self.derived(v, Op::Mean(self.id), &[self.id])
    }

    /// Column means: `r×c → 1×c`.
    pub fn mean_over_rows(&self) -> Var<'t> {
        let t = self.value_ref();
        let r = t.rows() as f64;
        let v = Tensor::from_fn(1, t.cols(), |_, j| (0..t.rows()).map(|i| t.get(i, j)).sum::<f64>() / r);
        drop(t);
        self.derived(v, Op::MeanOverRows(self.id), &[self.id])
    }

    /// Row means: `r×c → r×1`.
    pub fn mean_over_cols(&self) -> Var<'t> {
        let t = self.value_ref();
        let c = t.cols() as f64;
        let v = Tensor::from_fn(t.rows(), 1, |i, _| t.row(i).iter().sum::<f64>() / c);
        drop(t);
        self.derived(v, Op::MeanOverCols(self.id), &[self.id])
    }

    /// Repeats a `1×c` row `n` times.
    pub fn broadcast_rows(&self, n: usize) -> Result<Var<'t>> {
        let t = self.value_ref();
        if t.rows() != 1 {
            return Err(Error::Shape {
                op: "broadcast_rows",
                left: t.shape(),
                right: [1, t.cols()],
            });
        }
        let v = Tensor::from_fn(n, t.cols(), |_, j| t.get(0, j));
        drop(t);
        Ok(self.derived(v, Op::BroadcastRows(self.id), &[self.id]))
    }

    /// `D⁻¹A`; zero-degree rows get an implicit unit self-loop.
    pub fn row_normalize(&self) -> Result<Var<'t>> {
        let v = {
            let a = self.value_ref();
            check_square("row_normalize", &a)?;
            row_normalize(&a)
        };
        Ok(self.derived(v, Op::RowNormalize(self.id), &[self.id]))
    }

    /// `I − D^{-1/2} A D^{-1/2}`; zero-degree rows get an implicit unit self-loop.
    pub fn sym_laplacian(&self) -> Result<Var<'t>> {
        let v = {
            let a = self.value_ref();
            check_square("sym_laplacian", &a)?;
            sym_laplacian(&a)
        };
        Ok(self.derived(v, Op::SymLaplacian(self.id), &[self.id]))
    }

    /// Forward value `hard`, backward routed to `soft`.
    pub fn straight_through(hard: Tensor, soft: Var<'t>) -> Result<Var<'t>> {
        same_shape("straight_through", &hard, &soft.value_ref())?;
        Ok(soft.derived(hard, Op::StraightThrough(soft.id), &[soft.id]))
    }

    pub fn concat_cols(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts.first().ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let rows = first.shape()[0];
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let s = p.shape();
            if s[0] != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    left: first.shape(),
                    right: s,
                });
            }
            widths.push(s[1]);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        {
            let values: Vec<Ref<'_, Tensor>> = parts.iter().map(|p| p.value_ref()).collect();
            for i in 0..rows {
                for v in &values {
                    data.extend_from_slice(v.row(i));
                }
            }
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        let v = Tensor::new(rows, total, data)?;
        Ok(first.derived(v, Op::ConcatCols(ids.clone()), &ids))
    }

    pub fn concat_rows(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts.first().ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let cols = first.shape()[1];
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let v = p.value_ref();
            if v.cols() != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    left: first.shape(),
                    right: v.shape(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        let v = Tensor::new(rows, cols, data)?;
        Ok(first.derived(v, Op::ConcatRows(ids.clone()), &ids))
    }
}

pub fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        let row = x.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        for (j, e) in exps.iter().enumerate() {
            out.set(i, j, e / z);
        }
    }
    out
}

pub fn row_normalize(adj: &Tensor) -> Tensor {
    let a = with_isolated_self_loops(adj);
    let mut out = a.clone();
    for i in 0..a.rows() {
        let s: f64 = a.row(i).iter().sum();
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j) / s);
        }
    }
    out
}

pub fn sym_laplacian(adj: &Tensor) -> Tensor {
    let a = with_isolated_self_loops(adj);
    let n = a.rows();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / a.row(i).iter().sum::<f64>().sqrt()).collect();
    Tensor::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - a.get(i, j) * d[i] * d[j]
    })
}
