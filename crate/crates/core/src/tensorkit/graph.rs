use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::gemm::gemm;
use super::loss::LossKind;
use super::tensor::Tensor;
use crate::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    BatchMatMul { a: Var, b: Var, trans_b: bool },
    Conv1d { x: Var, w: Var, stride: usize, padding: usize, cols: Vec<f64> },
    Relu(Var),
    Softmax(Var),
    Dropout { x: Var, mask: Vec<f64> },
    Reshape(Var),
    SplitHeads { x: Var, heads: usize },
    MergeHeads { x: Var, heads: usize },
    Mean(Var),
    Sum(Var),
    Loss { pred: Var, target: Vec<f64>, kind: LossKind },
}

struct Node<'p> {
    value: Cow<'p, Tensor>,
    op: Op,
    requires_grad: bool,
}

/// Append-only computation tape.
///
/// Nodes are stored in creation order, which is a topological order, so the
/// backward pass is a single reverse sweep visiting each node once. Parameter
/// leaves borrow their tensors instead of copying them.
#[derive(Default)]
pub struct Graph<'p> {
    nodes: Vec<Node<'p>>,
}

/// Gradients of a scalar root with respect to every node that requires them.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient of `v`, zeros when the root does not depend on it.
    pub fn get_or_zeros(&self, v: Var, len: usize) -> Vec<f64> {
        self.get(v).map_or_else(|| vec![0.0; len], |g| g.to_vec())
    }
}

fn row_split(t: &Tensor) -> (usize, usize) {
    let last = *t.shape().last().unwrap_or(&1);
    (t.len() / last.max(1), last)
}

fn slot<'a>(lo: &'a mut [Option<Vec<f64>>], nodes: &[Node<'_>], v: Var) -> Option<&'a mut [f64]> {
    let n = &nodes[v.0];
    if !n.requires_grad {
        return None;
    }
    let len = n.value.len();
    Some(lo[v.0].get_or_insert_with(|| vec![0.0; len]).as_mut_slice())
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl<'p> Graph<'p> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Cow<'p, Tensor>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn derived(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let rg = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.push(Cow::Owned(value), op, rg)
    }

    /// Borrowed trainable leaf.
    pub fn param(&mut self, t: &'p Tensor) -> Var {
        self.push(Cow::Borrowed(t), Op::Leaf, true)
    }

    /// Owned leaf that receives a gradient.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Cow::Owned(t), Op::Leaf, true)
    }

    /// Owned leaf excluded from differentiation.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Cow::Owned(t), Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::dims("add", ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let out = Tensor::new(ta.shape(), data)?;
        Ok(self.derived(out, Op::Add(a, b), &[a, b]))
    }

    /// Adds a length-`C` bias along the last axis.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        let (_, c) = row_split(tx);
        if tb.len() != c || tb.rank() != 1 {
            return Err(Error::dims("add_bias", tx.shape(), tb.shape()));
        }
        let bias = tb.data();
        let data = tx.data().iter().enumerate().map(|(i, v)| v + bias[i % c]).collect();
        let out = Tensor::new(tx.shape(), data)?;
        Ok(self.derived(out, Op::AddBias(x, b), &[x, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::dims("mul", ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let out = Tensor::new(ta.shape(), data)?;
        Ok(self.derived(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let tx = self.value(x);
        let out = Tensor::new(tx.shape(), tx.data().iter().map(|v| v * s).collect()).expect("same shape");
        self.derived(out, Op::Scale(x, s), &[x])
    }

    /// `[…, K] × [K, N] → […, N]`, leading axes of `a` flattened into rows.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = row_split(ta);
        if tb.rank() != 2 || tb.shape()[0] != k || ta.rank() < 2 {
            return Err(Error::dims("matmul", ta.shape(), tb.shape()));
        }
        let n = tb.shape()[1];
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, 1.0, ta.data(), (k, 1), tb.data(), (n, 1), 0.0, &mut out, (n, 1));
        let mut shape = ta.shape().to_vec();
        *shape.last_mut().unwrap() = n;
        let out = Tensor::new(&shape, out)?;
        Ok(self.derived(out, Op::MatMul(a, b), &[a, b]))
    }

    /// Per-group `[G×M×K] × [G×K×N]`, or `× [G×N×K]ᵀ` when `trans_b`.
    pub fn batch_matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let bad = || Error::dims("batch_matmul", ta.shape(), tb.shape());
        if ta.rank() != 3 || tb.rank() != 3 || ta.shape()[0] != tb.shape()[0] {
            return Err(bad());
        }
        let (g, m, k) = (ta.shape()[0], ta.shape()[1], ta.shape()[2]);
        let (kb, n) = if trans_b {
            (tb.shape()[2], tb.shape()[1])
        } else {
            (tb.shape()[1], tb.shape()[2])
        };
        if kb != k {
            return Err(bad());
        }
        let mut out = vec![0.0; g * m * n];
        let bs = if trans_b { (1, k) } else { (n, 1) };
        for i in 0..g {
            gemm(
                m,
                k,
                n,
                1.0,
                &ta.data()[i * m * k..],
                (k, 1),
                &tb.data()[i * k * n..],
                bs,
                0.0,
                &mut out[i * m * n..],
                (n, 1),
            );
        }
        let out = Tensor::new(&[g, m, n], out)?;
        Ok(self.derived(out, Op::BatchMatMul { a, b, trans_b }, &[a, b]))
    }

    /// 1-D convolution over position-major input `[B×L×C_in]` with weight
    /// `[k×C_in×C_out]` and zero padding; output `[B×L_out×C_out]`.
    pub fn conv1d(&mut self, x: Var, w: Var, stride: usize, padding: usize) -> Result<Var> {
        let (tx, tw) = (self.value(x), self.value(w));
        let bad = || Error::dims("conv1d", tx.shape(), tw.shape());
        if tx.rank() != 3 || tw.rank() != 3 || tx.shape()[2] != tw.shape()[1] || stride == 0 {
            return Err(bad());
        }
        let (b, l, cin) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
        let (k, cout) = (tw.shape()[0], tw.shape()[2]);
        if l + 2 * padding < k {
            return Err(bad());
        }
        let lout = (l + 2 * padding - k) / stride + 1;
        let kc = k * cin;
        let mut cols = vec![0.0; b * lout * kc];
        let xd = tx.data();
        for bi in 0..b {
            for o in 0..lout {
                let row = &mut cols[(bi * lout + o) * kc..][..kc];
                for t in 0..k {
                    let pos = (o * stride + t) as isize - padding as isize;
                    if pos >= 0 && (pos as usize) < l {
                        let src = &xd[(bi * l + pos as usize) * cin..][..cin];
                        row[t * cin..(t + 1) * cin].copy_from_slice(src);
                    }
                }
            }
        }
        let mut out = vec![0.0; b * lout * cout];
        gemm(b * lout, kc, cout, 1.0, &cols, (kc, 1), tw.data(), (cout, 1), 0.0, &mut out, (cout, 1));
        let out = Tensor::new(&[b, lout, cout], out)?;
        Ok(self.derived(
            out,
            Op::Conv1d {
                x,
                w,
                stride,
                padding,
                cols,
            },
            &[x, w],
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let out = Tensor::new(tx.shape(), tx.data().iter().map(|v| v.max(0.0)).collect()).expect("same shape");
        self.derived(out, Op::Relu(x), &[x])
    }

    /// Softmax along the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let (_, c) = row_split(tx);
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(c.max(1)) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = (*v - m).exp();
                s += *v;
            }
            for v in row.iter_mut() {
                *v = super::flush(*v / s);
            }
        }
        let out = Tensor::new(tx.shape(), data).expect("same shape");
        self.derived(out, Op::Softmax(x), &[x])
    }

    /// Inverted dropout. With `train == false` (or `rate == 0`) this returns
    /// `x` itself.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, train: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !train || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let tx = self.value(x);
        let mask: Vec<f64> = (0..tx.len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let data = tx.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let out = Tensor::new(tx.shape(), data)?;
        Ok(self.derived(out, Op::Dropout { x, mask }, &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let tx = self.value(x);
        if shape.iter().product::<usize>() != tx.len() {
            return Err(Error::dims("reshape", tx.shape(), shape));
        }
        let out = tx.reshaped(shape)?;
        Ok(self.derived(out, Op::Reshape(x), &[x]))
    }

    /// `[B×…] → [B × rest]`.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x);
        let b = *s.first().ok_or_else(|| Error::dims("flatten", s, &[]))?;
        let rest = s[1..].iter().product::<usize>();
        self.reshape(x, &[b, rest])
    }

    /// `[B×L×H·d] → [B·H×L×d]`.
    pub fn split_heads(&mut self, x: Var, heads: usize) -> Result<Var> {
        let tx = self.value(x);
        if tx.rank() != 3 || heads == 0 || !tx.shape()[2].is_multiple_of(heads) {
            return Err(Error::dims("split_heads", tx.shape(), &[heads]));
        }
        let (b, l, dm) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
        let d = dm / heads;
        let mut out = vec![0.0; tx.len()];
        permute_heads(tx.data(), &mut out, b, l, heads, d, false);
        let out = Tensor::new(&[b * heads, l, d], out)?;
        Ok(self.derived(out, Op::SplitHeads { x, heads }, &[x]))
    }

    /// `[B·H×L×d] → [B×L×H·d]`.
    pub fn merge_heads(&mut self, x: Var, heads: usize) -> Result<Var> {
        let tx = self.value(x);
        if tx.rank() != 3 || heads == 0 || !tx.shape()[0].is_multiple_of(heads) {
            return Err(Error::dims("merge_heads", tx.shape(), &[heads]));
        }
        let (bh, l, d) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
        let b = bh / heads;
        let mut out = vec![0.0; tx.len()];
        permute_heads(tx.data(), &mut out, b, l, heads, d, true);
        let out = Tensor::new(&[b, l, heads * d], out)?;
        Ok(self.derived(out, Op::MergeHeads { x, heads }, &[x]))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let m = tx.data().iter().sum::<f64>() / tx.len().max(1) as f64;
        self.derived(Tensor::scalar(m), Op::Mean(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum::<f64>();
        self.derived(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    /// Scalar regression loss of `pred` (any shape, flattened) against `target`.
    pub fn loss(&mut self, pred: Var, target: &[f64], kind: LossKind) -> Result<Var> {
        let value = kind.eval(self.value(pred).data(), target)?;
        Ok(self.derived(
            Tensor::scalar(value),
            Op::Loss {
                pred,
                target: target.to_vec(),
                kind,
            },
            &[pred],
        ))
    }

    /// Reverse sweep from the scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let rt = self.value(root);
        if rt.len() != 1 {
            return Err(Error::Graph(format!("backward root must be scalar, got shape {:?}", rt.shape())));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(vec![1.0]);
        for i in (0..=root.0).rev() {
            let (lo, hi) = grads.split_at_mut(i);
            let Some(g) = hi[0].as_deref() else { continue };
            let node = &self.nodes[i];
            let nodes = &self.nodes;
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    if let Some(s) = slot(lo, nodes, *a) {
                        add_into(s, g);
                    }
                    if let Some(s) = slot(lo, nodes, *b) {
                        add_into(s, g);
                    }
                }
                Op::AddBias(x, b) => {
                    if let Some(s) = slot(lo, nodes, *x) {
                        add_into(s, g);
                    }
                    if let Some(s) = slot(lo, nodes, *b) {
                        let c = s.len();
                        for row in g.chunks(c) {
                            add_into(s, row);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    if let Some(s) = slot(lo, nodes, *a) {
                        for ((d, gi), y) in s.iter_mut().zip(g).zip(vb) {
                            *d += gi * y;
                        }
                    }
                    if let Some(s) = slot(lo, nodes, *b) {
                        for ((d, gi), y) in s.iter_mut().zip(g).zip(va) {
                            *d += gi * y;
                        }
                    }
                }
                Op::Scale(x, c) => {
                    if let Some(s) = slot(lo, nodes, *x) {
                        for (d, gi) in s.iter_mut().zip(g) {
                            *d += c * gi;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
                    let (m, k) = row_split(ta);
                    let n = tb.shape()[1];
                    if let Some(s) = slot(lo, nodes, *a) {
                        gemm(m, n, k, 1.0, g, (n, 1), tb.data(), (1, n), 1.0, s, (k, 1));
                    }
                    if let Some(s) = slot(lo, nodes, *b) {
                        gemm(k, m, n, 1.0, ta.data(), (1, k), g, (n, 1), 1.0, s, (n, 1));
                    }
                }
                Op::BatchMatMul { a, b, trans_b } => {
                    let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
                    let (gn, m, k) = (ta.shape()[0], ta.shape()[1], ta.shape()[2]);
                    let n = if *trans_b { tb.shape()[1] } else { tb.shape()[2] };
                    if let Some(s) = slot(lo, nodes, *a) {
                        // dA = dC · Bᵀ  (or dC · B when B is stored transposed)
                        let bs = if *trans_b { (k, 1) } else { (1, n) };
                        for i in 0..gn {
                            gemm(
                                m,
                                n,
                                k,
                                1.0,
                                &g[i * m * n..],
                                (n, 1),
                                &tb.data()[i * k * n..],
                                bs,
                                1.0,
                                &mut s[i * m * k..],
                                (k, 1),
                            );
                        }
                    }
                    if let Some(s) = slot(lo, nodes, *b) {
                        for i in 0..gn {
                            if *trans_b {
                                // dB[N×K] = dCᵀ · A
                                gemm(
                                    n,
                                    m,
                                    k,
                                    1.0,
                                    &g[i * m * n..],
                                    (1, n),
                                    &ta.data()[i * m * k..],
                                    (k, 1),
                                    1.0,
                                    &mut s[i * k * n..],
                                    (k, 1),
                                );
                            } else {
                                // dB[K×N] = Aᵀ · dC
                                gemm(
                                    k,
                                    m,
                                    n,
                                    1.0,
                                    &ta.data()[i * m * k..],
                                    (1, k),
                                    &g[i * m * n..],
                                    (n, 1),
                                    1.0,
                                    &mut s[i * k * n..],
                                    (n, 1),
                                );
                            }
                        }
                    }
                }
                Op::Conv1d {
                    x,
                    w,
                    stride,
                    padding,
                    cols,
                } => {
                    let (tx, tw) = (&nodes[x.0].value, &nodes[w.0].value);
                    let (b, l, cin) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
                    let (k, cout) = (tw.shape()[0], tw.shape()[2]);
                    let kc = k * cin;
                    let rows = cols.len() / kc;
                    let lout = rows / b;
                    if let Some(s) = slot(lo, nodes, *w) {
                        gemm(kc, rows, cout, 1.0, cols, (1, kc), g, (cout, 1), 1.0, s, (cout, 1));
                    }
                    if let Some(s) = slot(lo, nodes, *x) {
                        let mut dcols = vec![0.0; rows * kc];
                        gemm(rows, cout, kc, 1.0, g, (cout, 1), tw.data(), (1, cout), 0.0, &mut dcols, (kc, 1));
                        for bi in 0..b {
                            for o in 0..lout {
                                let row = &dcols[(bi * lout + o) * kc..][..kc];
                                for t in 0..k {
                                    let pos = (o * stride + t) as isize - *padding as isize;
                                    if pos >= 0 && (pos as usize) < l {
                                        let dst = &mut s[(bi * l + pos as usize) * cin..][..cin];
                                        add_into(dst, &row[t * cin..(t + 1) * cin]);
                                    }
                                }
                            }
                        }
                    }
                }
                Op::Relu(x) => {
                    let y = node.value.data();
                    if let Some(s) = slot(lo, nodes, *x) {
                        for ((d, gi), yi) in s.iter_mut().zip(g).zip(y) {
                            if *yi > 0.0 {
                                *d += gi;
                            }
                        }
                    }
                }
                Op::Softmax(x) => {
                    let y = node.value.data();
                    let (_, c) = row_split(&node.value);
                    if let Some(s) = slot(lo, nodes, *x) {
                        for ((srow, grow), yrow) in s.chunks_mut(c).zip(g.chunks(c)).zip(y.chunks(c)) {
                            let dot: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                            for ((d, gi), yi) in srow.iter_mut().zip(grow).zip(yrow) {
                                *d += yi * (gi - dot);
                            }
                        }
                    }
                }
                Op::Dropout { x, mask } => {
                    if let Some(s) = slot(lo, nodes, *x) {
                        for ((d, gi), m) in s.iter_mut().zip(g).zip(mask) {
                            *d += gi * m;
                        }
                    }
                }
                Op::Reshape(x) => {
                    if let Some(s) = slot(lo, nodes, *x) {
                        add_into(s, g);
                    }
                }
                Op::SplitHeads { x, heads } => {
                    let ts = &nodes[x.0].value;
                    let (b, l, dm) = (ts.shape()[0], ts.shape()[1], ts.shape()[2]);
                    if let Some(s) = slot(lo, nodes, *x) {
                        let mut tmp = vec![0.0; g.len()];
                        permute_heads(g, &mut tmp, b, l, *heads, dm / heads, true);
                        add_into(s, &tmp);
                    }
                }
                Op::MergeHeads { x, heads } => {
                    let ts = &nodes[x.0].value;
                    let (bh, l, d) = (ts.shape()[0], ts.shape()[1], ts.shape()[2]);
                    if let Some(s) = slot(lo, nodes, *x) {
                        let mut tmp = vec![0.0; g.len()];
                        permute_heads(g, &mut tmp, bh / heads, l, *heads, d, false);
                        add_into(s, &tmp);
                    }
                }
                Op::Mean(x) => {
                    if let Some(s) = slot(lo, nodes, *x) {
                        let c = g[0] / s.len() as f64;
                        s.iter_mut().for_each(|d| *d += c);
                    }
                }
                Op::Sum(x) => {
                    if let Some(s) = slot(lo, nodes, *x) {
                        s.iter_mut().for_each(|d| *d += g[0]);
                    }
                }
                Op::Loss { pred, target, kind } => {
                    let p = nodes[pred.0].value.data();
                    let value = node.value.data()[0];
                    if let Some(s) = slot(lo, nodes, *pred) {
                        kind.grad(p, target, value, s, g[0]);
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Moves between `[B×L×H×d]` (merged) and `[B×H×L×d]` (split) layouts.
/// `to_merged` reads split-layout `src` and writes merged-layout `dst`.
fn permute_heads(src: &[f64], dst: &mut [f64], b: usize, l: usize, h: usize, d: usize, to_merged: bool) {
    for bi in 0..b {
        for li in 0..l {
            for hi in 0..h {
                let merged = ((bi * l + li) * h + hi) * d;
                let split = ((bi * h + hi) * l + li) * d;
                let (s, t) = if to_merged { (split, merged) } else { (merged, split) };
                dst[t..t + d].copy_from_slice(&src[s..s + d]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], d: &[f64]) -> Tensor {
        Tensor::new(shape, d.to_vec()).unwrap()
    }

    #[test]
    fn sum_grad_is_ones() {
        let w = t(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.0, 9.0]);
        let mut g = Graph::new();
        let v = g.param(&w);
        let s = g.sum(v);
        let gr = g.backward(s).unwrap();
        assert_eq!(gr.get(v).unwrap(), &[1.0; 6]);
    }

    #[test]
    fn half_square_norm_grad_is_w() {
        let w = t(&[3], &[1.0, -2.0, 0.25]);
        let mut g = Graph::new();
        let v = g.param(&w);
        let sq = g.mul(v, v).unwrap();
        let s = g.sum(sq);
        let h = g.scale(s, 0.5);
        let gr = g.backward(h).unwrap();
        assert_eq!(gr.get(v).unwrap(), w.data());
    }

    #[test]
    fn non_scalar_root_rejected() {
        let w = t(&[2], &[1.0, 2.0]);
        let mut g = Graph::new();
        let v = g.param(&w);
        assert!(matches!(g.backward(v), Err(Error::Graph(_))));
    }

    #[test]
    fn delta_kernel_conv_is_identity() {
        let x = Tensor::from_fn(&[2, 7, 3], |i| i as f64 * 0.1 - 1.0);
        let mut w = Tensor::zeros(&[1, 3, 3]);
        for c in 0..3 {
            w.data_mut()[c * 3 + c] = 1.0;
        }
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let wv = g.param(&w);
        let y = g.conv1d(xv, wv, 1, 0).unwrap();
        assert_eq!(g.value(y), &x);
    }

    #[test]
    fn zero_softmax_is_uniform() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[2, 4]));
        let y = g.softmax(x);
        assert!(g.value(y).data().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn inference_dropout_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = Graph::new();
        let x = g.constant(Tensor::from_fn(&[3, 3], |i| i as f64));
        let y = g.dropout(x, 0.2, false, &mut rng).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn heads_round_trip() {
        let x = Tensor::from_fn(&[2, 3, 8], |i| i as f64);
        let mut g = Graph::new();
        let v = g.constant(x.clone());
        let s = g.split_heads(v, 4).unwrap();
        assert_eq!(g.value(s).shape(), &[8, 3, 2]);
        // head 1 of batch 0, position 2 holds merged columns 2..4
        assert_eq!(&g.value(s).data()[(3 + 2) * 2..][..2], &[2.0 * 8.0 + 2.0, 2.0 * 8.0 + 3.0]);
        let m = g.merge_heads(s, 4).unwrap();
        assert_eq!(g.value(m), &x);
    }

    #[test]
    fn shape_errors_name_operands() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        match g.matmul(a, b) {
            Err(Error::DimensionMismatch { op, lhs, rhs }) => {
                assert_eq!(op, "matmul");
                assert_eq!((lhs, rhs), (vec![2, 3], vec![2, 3]));
            }
            other => panic!("{other:?}"),
        }
    }
}
