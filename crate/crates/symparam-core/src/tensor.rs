//! Dense tensors and a define-by-run reverse-mode autodiff tape.
//!
//! The engine is deliberately small: dense layers, elementwise activations,
//! global average pooling, channel gating, concatenation and the two loss
//! heads (MSE, clamped BCE) cover every model in this crate. Tensors are
//! plain row-major `f64` buffers; a fresh [`Tape`] is built per forward pass
//! and consumed by a single [`Tape::backward`] call.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Plain dense value: shape + row-major data. Parameters and inputs live as
/// `Tensor`s outside any tape; gradients are read back per-pass via the id
/// returned when the tensor was placed on the tape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!(
                "zero extent in shape {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} implies {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::from_vec(shape, vec![0.0; n])
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Elementwise nonlinearity selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize, usize), // broadcast a scalar node over all elements
    Matmul(usize, usize),
    AddRowBroadcast(usize, usize), // [m,n] + [n]
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    AvgPool(usize),          // [h,w,c] -> [1,1,c]
    ChannelScale(usize, usize), // [h,w,c] * gates of length c
    ConcatLast(usize, usize),
    Reshape(usize),
    Sum(usize),
    Mse(usize, usize),
    Bce(usize, usize, f64),
}

struct Node {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
    op: Op,
}

/// Define-by-run tape. Ops append nodes in execution order, so the record is
/// topologically sorted by construction and backward is a single reverse
/// sweep visiting each node once.
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Place a tensor on the tape as a leaf.
    pub fn leaf(&mut self, t: &Tensor, requires_grad: bool) -> TensorId {
        self.push_unchecked(t.shape.clone(), t.data.clone(), requires_grad, Op::Leaf)
    }

    pub fn constant(&mut self, t: &Tensor) -> TensorId {
        self.leaf(t, false)
    }

    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].data
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    /// Gradient buffer of a node, present only after [`Tape::backward`].
    pub fn grad(&self, id: TensorId) -> Option<&[f64]> {
        self.nodes[id.0].grad.as_deref()
    }

    fn push_unchecked(
        &mut self,
        shape: Vec<usize>,
        data: Vec<f64>,
        requires_grad: bool,
        op: Op,
    ) -> TensorId {
        self.nodes.push(Node {
            shape,
            data,
            grad: None,
            requires_grad,
            op,
        });
        TensorId(self.nodes.len() - 1)
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, requires_grad: bool, op: Op) -> Result<TensorId> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite value produced by {op:?}"
            )));
        }
        Ok(self.push_unchecked(shape, data, requires_grad, op))
    }

    fn rg(&self, a: TensorId) -> bool {
        self.nodes[a.0].requires_grad
    }

    fn same_shape(&self, a: TensorId, b: TensorId, what: &str) -> Result<()> {
        if self.nodes[a.0].shape != self.nodes[b.0].shape {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.nodes[a.0].shape, self.nodes[b.0].shape
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.same_shape(a, b, "add")?;
        let data: Vec<f64> = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(x, y)| x + y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.same_shape(a, b, "sub")?;
        let data: Vec<f64> = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(x, y)| x - y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.same_shape(a, b, "mul")?;
        let data: Vec<f64> = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(x, y)| x * y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Mul(a.0, b.0))
    }

    pub fn scale(&mut self, a: TensorId, k: f64) -> Result<TensorId> {
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|x| x * k).collect();
        let rg = self.rg(a);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Scale(a.0, k))
    }

    /// `a + s` where `s` is a scalar node broadcast over every element of `a`.
    pub fn add_scalar(&mut self, a: TensorId, s: TensorId) -> Result<TensorId> {
        if self.nodes[s.0].data.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "add_scalar: rhs must be scalar, got {:?}",
                self.nodes[s.0].shape
            )));
        }
        let sv = self.nodes[s.0].data[0];
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|x| x + sv).collect();
        let rg = self.rg(a) || self.rg(s);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::AddScalar(a.0, s.0))
    }

    /// Matrix product of two 2-D tensors `[m,n] x [n,p] -> [m,p]`.
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (sa, sb) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch(format!(
                "matmul: {sa:?} x {sb:?}"
            )));
        }
        let (m, n, p) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * p];
        let da = &self.nodes[a.0].data;
        let db = &self.nodes[b.0].data;
        for i in 0..m {
            for kk in 0..n {
                let aik = da[i * n + kk];
                let row = &db[kk * p..(kk + 1) * p];
                let dst = &mut out[i * p..(i + 1) * p];
                for j in 0..p {
                    dst[j] += aik * row[j];
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        self.push(vec![m, p], out, rg, Op::Matmul(a.0, b.0))
    }

    /// `x + bias` with `x: [m,n]`, `bias: [n]` broadcast over rows.
    pub fn add_row_broadcast(&mut self, x: TensorId, bias: TensorId) -> Result<TensorId> {
        let (sx, sb) = (&self.nodes[x.0].shape, &self.nodes[bias.0].shape);
        if sx.len() != 2 || sb.len() != 1 || sx[1] != sb[0] {
            return Err(Error::ShapeMismatch(format!(
                "add_row_broadcast: {sx:?} + {sb:?}"
            )));
        }
        let (m, n) = (sx[0], sx[1]);
        let dx = &self.nodes[x.0].data;
        let db = &self.nodes[bias.0].data;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] = dx[i * n + j] + db[j];
            }
        }
        let rg = self.rg(x) || self.rg(bias);
        self.push(vec![m, n], out, rg, Op::AddRowBroadcast(x.0, bias.0))
    }

    /// Affine layer `x·W + bias`: `[b,n] x [n,m] + [m] -> [b,m]`.
    pub fn dense(&mut self, x: TensorId, w: TensorId, bias: TensorId) -> Result<TensorId> {
        let y = self.matmul(x, w)?;
        self.add_row_broadcast(y, bias)
    }

    pub fn relu(&mut self, a: TensorId) -> Result<TensorId> {
        let data: Vec<f64> = self.nodes[a.0]
            .data
            .iter()
            .map(|&x| if x > 0.0 { x } else { 0.0 })
            .collect();
        let rg = self.rg(a);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Relu(a.0))
    }

    pub fn sigmoid(&mut self, a: TensorId) -> Result<TensorId> {
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|&x| sigmoid(x)).collect();
        let rg = self.rg(a);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Sigmoid(a.0))
    }

    pub fn tanh(&mut self, a: TensorId) -> Result<TensorId> {
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|&x| libm::tanh(x)).collect();
        let rg = self.rg(a);
        self.push(self.nodes[a.0].shape.clone(), data, rg, Op::Tanh(a.0))
    }

    pub fn activation(&mut self, a: TensorId, kind: Activation) -> Result<TensorId> {
        match kind {
            Activation::Relu => self.relu(a),
            Activation::Sigmoid => self.sigmoid(a),
            Activation::Tanh => self.tanh(a),
        }
    }

    /// Per-channel spatial mean: `[h,w,c] -> [1,1,c]`.
    pub fn global_avg_pool(&mut self, a: TensorId) -> Result<TensorId> {
        let s = &self.nodes[a.0].shape;
        if s.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "global_avg_pool expects [h,w,c], got {s:?}"
            )));
        }
        let (h, w, c) = (s[0], s[1], s[2]);
        let d = &self.nodes[a.0].data;
        let mut out = vec![0.0; c];
        for pos in 0..h * w {
            for ch in 0..c {
                out[ch] += d[pos * c + ch];
            }
        }
        let inv = 1.0 / (h * w) as f64;
        for v in &mut out {
            *v *= inv;
        }
        let rg = self.rg(a);
        self.push(vec![1, 1, c], out, rg, Op::AvgPool(a.0))
    }

    /// `out[h,w,c] = x[h,w,c] * m[c]`; `m` may be `[c]` or `[1,1,c]`.
    pub fn channel_scale(&mut self, x: TensorId, m: TensorId) -> Result<TensorId> {
        let sx = &self.nodes[x.0].shape;
        if sx.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "channel_scale expects [h,w,c] features, got {sx:?}"
            )));
        }
        let c = sx[2];
        if self.nodes[m.0].data.len() != c {
            return Err(Error::ShapeMismatch(format!(
                "channel_scale: {c} channels vs {} gates",
                self.nodes[m.0].data.len()
            )));
        }
        let (h, w) = (sx[0], sx[1]);
        let dx = &self.nodes[x.0].data;
        let dm = &self.nodes[m.0].data;
        let mut out = vec![0.0; h * w * c];
        for pos in 0..h * w {
            for ch in 0..c {
                out[pos * c + ch] = dx[pos * c + ch] * dm[ch];
            }
        }
        let rg = self.rg(x) || self.rg(m);
        self.push(sx.clone(), out, rg, Op::ChannelScale(x.0, m.0))
    }

    /// Concatenate along the last axis; all other extents must agree.
    pub fn concat_last(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (sa, sb) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
        if sa.len() != sb.len() || sa[..sa.len() - 1] != sb[..sb.len() - 1] {
            return Err(Error::ShapeMismatch(format!(
                "concat_last: {sa:?} vs {sb:?}"
            )));
        }
        let (ca, cb) = (sa[sa.len() - 1], sb[sb.len() - 1]);
        let rows: usize = sa[..sa.len() - 1].iter().product();
        let da = &self.nodes[a.0].data;
        let db = &self.nodes[b.0].data;
        let mut out = Vec::with_capacity(rows * (ca + cb));
        for r in 0..rows {
            out.extend_from_slice(&da[r * ca..(r + 1) * ca]);
            out.extend_from_slice(&db[r * cb..(r + 1) * cb]);
        }
        let mut shape = sa.clone();
        *shape.last_mut().unwrap() = ca + cb;
        let rg = self.rg(a) || self.rg(b);
        self.push(shape, out, rg, Op::ConcatLast(a.0, b.0))
    }

    pub fn reshape(&mut self, a: TensorId, shape: &[usize]) -> Result<TensorId> {
        let n: usize = shape.iter().product();
        if n != self.nodes[a.0].data.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!(
                "reshape {:?} -> {shape:?}",
                self.nodes[a.0].shape
            )));
        }
        let data = self.nodes[a.0].data.clone();
        let rg = self.rg(a);
        self.push(shape.to_vec(), data, rg, Op::Reshape(a.0))
    }

    pub fn sum(&mut self, a: TensorId) -> Result<TensorId> {
        let s: f64 = self.nodes[a.0].data.iter().sum();
        let rg = self.rg(a);
        self.push(vec![1], vec![s], rg, Op::Sum(a.0))
    }

    /// Mean squared error, scalar output.
    pub fn mse_loss(&mut self, pred: TensorId, target: TensorId) -> Result<TensorId> {
        self.same_shape(pred, target, "mse_loss")?;
        let dp = &self.nodes[pred.0].data;
        let dt = &self.nodes[target.0].data;
        let n = dp.len() as f64;
        let s: f64 = dp.iter().zip(dt).map(|(p, t)| (p - t) * (p - t)).sum();
        let rg = self.rg(pred) || self.rg(target);
        self.push(vec![1], vec![s / n], rg, Op::Mse(pred.0, target.0))
    }

    /// Binary cross entropy with the prediction clamped into
    /// `[clamp_eps, 1-clamp_eps]` before the logs. Targets must be 0 or 1.
    pub fn bce_loss(&mut self, pred: TensorId, target: TensorId, clamp_eps: f64) -> Result<TensorId> {
        self.same_shape(pred, target, "bce_loss")?;
        if !(clamp_eps > 0.0 && clamp_eps < 0.5) {
            return Err(Error::Domain(format!("bce clamp_eps {clamp_eps} not in (0, 0.5)")));
        }
        if self.nodes[target.0].data.iter().any(|&t| t != 0.0 && t != 1.0) {
            return Err(Error::Domain("bce_loss target contains non-binary value".into()));
        }
        let dp = &self.nodes[pred.0].data;
        let dt = &self.nodes[target.0].data;
        let n = dp.len() as f64;
        let mut s = 0.0;
        for (&p, &t) in dp.iter().zip(dt) {
            let pc = p.clamp(clamp_eps, 1.0 - clamp_eps);
            s -= t * libm::log(pc) + (1.0 - t) * libm::log(1.0 - pc);
        }
        let rg = self.rg(pred) || self.rg(target);
        self.push(vec![1], vec![s / n], rg, Op::Bce(pred.0, target.0, clamp_eps))
    }

    /// Reverse sweep from a scalar loss; populates `grad` on every node that
    /// requires gradients. A tape can be consumed exactly once.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if self.backward_done {
            return Err(Error::Usage("backward called twice on the same tape".into()));
        }
        if self.nodes[loss.0].data.len() != 1 {
            return Err(Error::Usage(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        self.backward_done = true;

        let n = self.nodes.len();
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|node| vec![0.0; node.data.len()])
            .collect();
        grads[loss.0][0] = 1.0;

        for i in (0..n).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let g = grads[i].clone();
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            match self.nodes[i].op.clone() {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    for (ga, &gi) in grads[a].iter_mut().zip(&g) {
                        *ga += gi;
                    }
                    for (gb, &gi) in grads[b].iter_mut().zip(&g) {
                        *gb += gi;
                    }
                }
                Op::Sub(a, b) => {
                    for (ga, &gi) in grads[a].iter_mut().zip(&g) {
                        *ga += gi;
                    }
                    for (gb, &gi) in grads[b].iter_mut().zip(&g) {
                        *gb -= gi;
                    }
                }
                Op::Mul(a, b) => {
                    let db = self.nodes[b].data.clone();
                    for (j, (ga, &gi)) in grads[a].iter_mut().zip(&g).enumerate() {
                        *ga += gi * db[j];
                    }
                    let da = self.nodes[a].data.clone();
                    for (j, (gb, &gi)) in grads[b].iter_mut().zip(&g).enumerate() {
                        *gb += gi * da[j];
                    }
                }
                Op::Scale(a, k) => {
                    for (ga, &gi) in grads[a].iter_mut().zip(&g) {
                        *ga += gi * k;
                    }
                }
                Op::AddScalar(a, s) => {
                    for (ga, &gi) in grads[a].iter_mut().zip(&g) {
                        *ga += gi;
                    }
                    grads[s][0] += g.iter().sum::<f64>();
                }
                Op::Matmul(a, b) => {
                    let (m, nn) = (self.nodes[a].shape[0], self.nodes[a].shape[1]);
                    let p = self.nodes[b].shape[1];
                    let da = self.nodes[a].data.clone();
                    let db = self.nodes[b].data.clone();
                    // dA = dC · Bᵀ
                    for i2 in 0..m {
                        for kk in 0..nn {
                            let mut acc = 0.0;
                            for j in 0..p {
                                acc += g[i2 * p + j] * db[kk * p + j];
                            }
                            grads[a][i2 * nn + kk] += acc;
                        }
                    }
                    // dB = Aᵀ · dC
                    for kk in 0..nn {
                        for i2 in 0..m {
                            let aik = da[i2 * nn + kk];
                            for j in 0..p {
                                grads[b][kk * p + j] += aik * g[i2 * p + j];
                            }
                        }
                    }
                }
                Op::AddRowBroadcast(x, bias) => {
                    let (m, nn) = (self.nodes[x].shape[0], self.nodes[x].shape[1]);
                    for (gx, &gi) in grads[x].iter_mut().zip(&g) {
                        *gx += gi;
                    }
                    for i2 in 0..m {
                        for j in 0..nn {
                            grads[bias][j] += g[i2 * nn + j];
                        }
                    }
                }
                Op::Relu(a) => {
                    let da = self.nodes[a].data.clone();
                    for (j, (ga, &gi)) in grads[a].iter_mut().zip(&g).enumerate() {
                        if da[j] > 0.0 {
                            *ga += gi;
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let out = self.nodes[i].data.clone();
                    for (j, (ga, &gi)) in grads[a].iter_mut().zip(&g).enumerate() {
                        *ga += gi * out[j] * (1.0 - out[j]);
                    }
                }
                Op::Tanh(a) => {
                    let out = self.nodes[i].data.clone();
                    for (j, (ga, &gi)) in grads[a].iter_mut().zip(&g).enumerate() {
                        *ga += gi * (1.0 - out[j] * out[j]);
                    }
                }
                Op::AvgPool(a) => {
                    let s = &self.nodes[a].shape;
                    let (h, w, c) = (s[0], s[1], s[2]);
                    let inv = 1.0 / (h * w) as f64;
                    for pos in 0..h * w {
                        for ch in 0..c {
                            grads[a][pos * c + ch] += g[ch] * inv;
                        }
                    }
                }
                Op::ChannelScale(x, m) => {
                    let s = &self.nodes[x].shape;
                    let (h, w, c) = (s[0], s[1], s[2]);
                    let dm = self.nodes[m].data.clone();
                    let dx = self.nodes[x].data.clone();
                    for pos in 0..h * w {
                        for ch in 0..c {
                            grads[x][pos * c + ch] += g[pos * c + ch] * dm[ch];
                            grads[m][ch] += g[pos * c + ch] * dx[pos * c + ch];
                        }
                    }
                }
                Op::ConcatLast(a, b) => {
                    let sa = &self.nodes[a].shape;
                    let ca = sa[sa.len() - 1];
                    let cb = *self.nodes[b].shape.last().unwrap();
                    let rows: usize = sa[..sa.len() - 1].iter().product();
                    for r in 0..rows {
                        for j in 0..ca {
                            grads[a][r * ca + j] += g[r * (ca + cb) + j];
                        }
                        for j in 0..cb {
                            grads[b][r * cb + j] += g[r * (ca + cb) + ca + j];
                        }
                    }
                }
                Op::Reshape(a) => {
                    for (ga, &gi) in grads[a].iter_mut().zip(&g) {
                        *ga += gi;
                    }
                }
                Op::Sum(a) => {
                    for ga in grads[a].iter_mut() {
                        *ga += g[0];
                    }
                }
                Op::Mse(p, t) => {
                    let dp = self.nodes[p].data.clone();
                    let dt = self.nodes[t].data.clone();
                    let inv = 2.0 / dp.len() as f64;
                    for j in 0..dp.len() {
                        let d = inv * (dp[j] - dt[j]) * g[0];
                        grads[p][j] += d;
                        grads[t][j] -= d;
                    }
                }
                Op::Bce(p, t, eps) => {
                    let dp = self.nodes[p].data.clone();
                    let dt = self.nodes[t].data.clone();
                    let inv = 1.0 / dp.len() as f64;
                    for j in 0..dp.len() {
                        // one-sided clamp gradient: flat (zero) when clamped on
                        // the correct side, where the loss really is constant;
                        // restoring (evaluated at the clamp) when a sample is
                        // stuck on the wrong side, so it can recover
                        let clamped_correct = (dp[j] <= eps && dt[j] == 0.0)
                            || (dp[j] >= 1.0 - eps && dt[j] == 1.0);
                        if clamped_correct {
                            continue;
                        }
                        // wrong-side clamps get a gentle constant restoring
                        // push (the gradient evaluated at probability 1/2) so
                        // stuck samples recover without flooding the optimizer
                        let pc = if dp[j] <= eps || dp[j] >= 1.0 - eps {
                            0.5
                        } else {
                            dp[j]
                        };
                        let d = (-dt[j] / pc + (1.0 - dt[j]) / (1.0 - pc)) * inv;
                        grads[p][j] += d * g[0];
                    }
                }
            }
        }

        for (node, g) in self.nodes.iter_mut().zip(grads) {
            if node.requires_grad {
                node.grad = Some(g);
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}
