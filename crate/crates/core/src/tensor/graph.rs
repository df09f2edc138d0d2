use super::conv::{self, ConvGeom};
use super::{Result, Tensor, TensorError};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Abs(Var),
    Conv2d(Var, Var, ConvGeom),
    ConvTranspose2d(Var, Var, ConvGeom),
    Reshape(Var),
    Softmax(Var),
    LogSoftmax(Var),
    CrossEntropy(Var, Vec<usize>),
    BceWithLogits(Var, Vec<f64>),
    Mean(Var),
    Sum(Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of primitive applications.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to the graph's leaves.
#[derive(Clone, Debug)]
pub struct Gradients {
    leaves: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for a leaf created with `requires_grad`; zeros if the loss
    /// never touched it. `None` for intermediate nodes and frozen leaves.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.leaves.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.leaves.get_mut(v.0).and_then(Option::take)
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn invalid(op: &'static str, msg: impl Into<String>) -> TensorError {
    TensorError::Invalid {
        op,
        msg: msg.into(),
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `out[m,n] = a[m,k] * b[k,n]`
fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn row_softmax(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        let mut total = 0.0;
        for &v in row {
            let e = (v - max).exp();
            total += e;
            out.push(e);
        }
        for o in &mut out[start..] {
            *o /= total;
        }
    }
    out
}

fn row_log_softmax(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|&v| v - lse));
    }
    out
}

fn as_matrix(t: &Tensor) -> Option<(usize, usize)> {
    match *t.shape() {
        [m, n] => Some((m, n)),
        _ => None,
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Adds an input or parameter tensor.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (Some((m, k)), Some((k2, n))) = (as_matrix(ta), as_matrix(tb)) else {
            return Err(mismatch("matmul", ta, tb));
        };
        if k != k2 {
            return Err(mismatch("matmul", ta, tb));
        }
        let out = matmul_raw(ta.data(), tb.data(), m, k, n);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), &[a, b]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let Some((m, n)) = as_matrix(ta) else {
            return Err(invalid("transpose", format!("expected a matrix, got {:?}", ta.shape())));
        };
        let src = ta.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = src[i * n + j];
            }
        }
        Ok(self.push(Tensor::new(vec![n, m], out)?, Op::Transpose(a), &[a]))
    }

    /// Adds `bias[c]` along axis 1 of a `[m, c]` or `[b, c, h, w]` tensor.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(bias));
        if tb.rank() != 1 || tx.rank() < 2 || tx.shape()[1] != tb.len() {
            return Err(mismatch("add_bias", tx, tb));
        }
        let channels = tb.len();
        let inner: usize = tx.shape()[2..].iter().product();
        let mut out = tx.data().to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            *o += tb.data()[(i / inner) % channels];
        }
        let shape = tx.shape().to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::AddBias(x, bias), &[x, bias]))
    }

    fn zip_same(&self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch(op, ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&p, &q)| f(p, q)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("add", a, b, |p, q| p + q)?;
        Ok(self.push(t, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("sub", a, b, |p, q| p - q)?;
        Ok(self.push(t, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("mul", a, b, |p, q| p * q)?;
        Ok(self.push(t, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let t = self.value(a).map(|v| v * factor);
        self.push(t, Op::Scale(a, factor), &[a])
    }

    /// Rectifier with the subgradient at zero taken as zero.
    pub fn relu(&mut self, a: Var) -> Var {
        let t = self.value(a).map(|v| if v > 0.0 { v } else { 0.0 });
        self.push(t, Op::Relu(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.value(a).map(f64::tanh);
        self.push(t, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = self.value(a).map(sigmoid);
        self.push(t, Op::Sigmoid(a), &[a])
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let t = self.value(a).map(f64::abs);
        self.push(t, Op::Abs(a), &[a])
    }

    fn conv_geom(
        &self,
        op: &'static str,
        x: Var,
        w: Var,
        stride: usize,
        pad: usize,
        transposed: bool,
    ) -> Result<ConvGeom> {
        let (tx, tw) = (self.value(x), self.value(w));
        let (&[batch, in_ch, in_h, in_w], &[w0, w1, kh, kw]) = (tx.shape(), tw.shape()) else {
            return Err(mismatch(op, tx, tw));
        };
        if stride == 0 {
            return Err(invalid(op, "stride must be positive"));
        }
        let (w_in, out_ch) = if transposed { (w0, w1) } else { (w1, w0) };
        if w_in != in_ch {
            return Err(mismatch(op, tx, tw));
        }
        let (out_h, out_w) = if transposed {
            let oh = ((in_h - 1) * stride + kh) as isize - 2 * pad as isize;
            let ow = ((in_w - 1) * stride + kw) as isize - 2 * pad as isize;
            if oh <= 0 || ow <= 0 {
                return Err(mismatch(op, tx, tw));
            }
            (oh as usize, ow as usize)
        } else {
            if in_h + 2 * pad < kh || in_w + 2 * pad < kw {
                return Err(mismatch(op, tx, tw));
            }
            ((in_h + 2 * pad - kh) / stride + 1, (in_w + 2 * pad - kw) / stride + 1)
        };
        Ok(ConvGeom {
            batch,
            in_ch,
            out_ch,
            in_h,
            in_w,
            out_h,
            out_w,
            kh,
            kw,
            stride,
            pad,
        })
    }

    /// `x: [b, in_ch, h, w]`, `weight: [out_ch, in_ch, kh, kw]`.
    pub fn conv2d(&mut self, x: Var, weight: Var, stride: usize, pad: usize) -> Result<Var> {
        let g = self.conv_geom("conv2d", x, weight, stride, pad, false)?;
        let out = conv::conv2d_forward(&g, self.value(x).data(), self.value(weight).data());
        let t = Tensor::new(vec![g.batch, g.out_ch, g.out_h, g.out_w], out)?;
        Ok(self.push(t, Op::Conv2d(x, weight, g), &[x, weight]))
    }

    /// `x: [b, in_ch, h, w]`, `weight: [in_ch, out_ch, kh, kw]`; output side
    /// is `(h - 1) * stride - 2 * pad + kh`.
    pub fn conv_transpose2d(&mut self, x: Var, weight: Var, stride: usize, pad: usize) -> Result<Var> {
        let g = self.conv_geom("conv_transpose2d", x, weight, stride, pad, true)?;
        let out = conv::conv_transpose2d_forward(&g, self.value(x).data(), self.value(weight).data());
        let t = Tensor::new(vec![g.batch, g.out_ch, g.out_h, g.out_w], out)?;
        Ok(self.push(t, Op::ConvTranspose2d(x, weight, g), &[x, weight]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a).clone().reshape(shape)?;
        Ok(self.push(t, Op::Reshape(a), &[a]))
    }

    /// Collapses everything after the leading axis.
    pub fn flatten(&mut self, a: Var) -> Result<Var> {
        let shape = self.value(a).shape();
        let rows = *shape.first().unwrap_or(&1);
        let cols = self.value(a).len() / rows;
        self.reshape(a, &[rows, cols])
    }

    fn matrix_of(&self, op: &'static str, a: Var) -> Result<(usize, usize)> {
        as_matrix(self.value(a))
            .ok_or_else(|| invalid(op, format!("expected [rows, classes], got {:?}", self.value(a).shape())))
    }

    /// Row-wise softmax of a `[rows, classes]` matrix.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let (m, n) = self.matrix_of("softmax", a)?;
        let out = row_softmax(self.value(a).data(), n);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::Softmax(a), &[a]))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let (m, n) = self.matrix_of("log_softmax", a)?;
        let out = row_log_softmax(self.value(a).data(), n);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::LogSoftmax(a), &[a]))
    }

    /// Mean over rows of `-log softmax(logits)[row, target]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let (m, n) = self.matrix_of("cross_entropy", logits)?;
        if targets.len() != m {
            return Err(TensorError::ShapeMismatch {
                op: "cross_entropy",
                lhs: vec![m, n],
                rhs: vec![targets.len()],
            });
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= n) {
            return Err(invalid("cross_entropy", format!("target {bad} out of range for {n} classes")));
        }
        let logp = row_log_softmax(self.value(logits).data(), n);
        let total: f64 = targets.iter().enumerate().map(|(i, &t)| -logp[i * n + t]).sum();
        let t = Tensor::scalar(total / m as f64);
        Ok(self.push(t, Op::CrossEntropy(logits, targets.to_vec()), &[logits]))
    }

    /// Mean binary cross-entropy of sigmoid(logits) against targets in [0, 1].
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f64]) -> Result<Var> {
        let tl = self.value(logits);
        if tl.len() != targets.len() {
            return Err(TensorError::ShapeMismatch {
                op: "bce_with_logits",
                lhs: tl.shape().to_vec(),
                rhs: vec![targets.len()],
            });
        }
        let total: f64 = tl
            .data()
            .iter()
            .zip(targets)
            .map(|(&x, &t)| x.max(0.0) - x * t + (-x.abs()).exp().ln_1p())
            .sum();
        let t = Tensor::scalar(total / targets.len() as f64);
        Ok(self.push(t, Op::BceWithLogits(logits, targets.to_vec()), &[logits]))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let v = t.sum() / t.len() as f64;
        self.push(Tensor::scalar(v), Op::Mean(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.value(a).sum();
        self.push(Tensor::scalar(v), Op::Sum(a), &[a])
    }

    /// Signs of every relu and abs input, in recording order. Two
    /// evaluations with different signatures straddle a kink.
    pub fn kink_signature(&self) -> Vec<i8> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(a) | Op::Abs(a) = node.op {
                sig.extend(self.nodes[a.0].value.data().iter().map(|&v| {
                    if v > 0.0 {
                        1
                    } else if v < 0.0 {
                        -1
                    } else {
                        0
                    }
                }));
            }
        }
        sig
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(TensorError::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }

        let leaves = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| match node.op {
                Op::Leaf if node.requires_grad => Some(match grads.get_mut(i).and_then(Option::take) {
                    Some(g) => Tensor::new(node.value.shape().to_vec(), g).expect("gradient shape"),
                    None => Tensor::zeros(node.value.shape()),
                }),
                _ => None,
            })
            .collect();
        Ok(Gradients { leaves })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| self.nodes[v.0].value.data();
        let mut acc = |v: Var, contribution: Vec<f64>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => {
                    for (e, c) in existing.iter_mut().zip(contribution) {
                        *e += c;
                    }
                }
                slot @ None => *slot = Some(contribution),
            }
        };
        let out = node.value.data();

        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let [m, k] = *self.nodes[a.0].value.shape() else { unreachable!() };
                let n = self.nodes[b.0].value.shape()[1];
                let (ad, bd) = (val(*a), val(*b));
                if self.nodes[a.0].requires_grad {
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &bd[p * n..(p + 1) * n];
                            da[i * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        }
                    }
                    acc(*a, da);
                }
                if self.nodes[b.0].requires_grad {
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let av = ad[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for (d, &gv) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *d += av * gv;
                            }
                        }
                    }
                    acc(*b, db);
                }
            }
            Op::Transpose(a) => {
                let [m, n] = *self.nodes[a.0].value.shape() else { unreachable!() };
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        da[i * n + j] = g[j * m + i];
                    }
                }
                acc(*a, da);
            }
            Op::AddBias(x, b) => {
                acc(*x, g.to_vec());
                let shape = self.nodes[x.0].value.shape();
                let channels = shape[1];
                let inner: usize = shape[2..].iter().product();
                let mut db = vec![0.0; channels];
                for (i, &gv) in g.iter().enumerate() {
                    db[(i / inner) % channels] += gv;
                }
                acc(*b, db);
            }
            Op::Add(a, b) => {
                acc(*a, g.to_vec());
                acc(*b, g.to_vec());
            }
            Op::Sub(a, b) => {
                acc(*a, g.to_vec());
                acc(*b, g.iter().map(|v| -v).collect());
            }
            Op::Mul(a, b) => {
                let (ad, bd) = (val(*a), val(*b));
                acc(*a, g.iter().zip(bd).map(|(x, y)| x * y).collect());
                acc(*b, g.iter().zip(ad).map(|(x, y)| x * y).collect());
            }
            Op::Scale(a, f) => acc(*a, g.iter().map(|v| v * f).collect()),
            Op::Relu(a) => acc(
                *a,
                g.iter().zip(val(*a)).map(|(&gv, &x)| if x > 0.0 { gv } else { 0.0 }).collect(),
            ),
            Op::Tanh(a) => acc(*a, g.iter().zip(out).map(|(gv, y)| gv * (1.0 - y * y)).collect()),
            Op::Sigmoid(a) => acc(*a, g.iter().zip(out).map(|(gv, y)| gv * y * (1.0 - y)).collect()),
            Op::Abs(a) => acc(
                *a,
                g.iter()
                    .zip(val(*a))
                    .map(|(&gv, &x)| {
                        if x > 0.0 {
                            gv
                        } else if x < 0.0 {
                            -gv
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ),
            Op::Conv2d(x, w, geom) => {
                let (dx, dw) = conv::conv2d_backward(geom, val(*x), val(*w), g);
                acc(*x, dx);
                acc(*w, dw);
            }
            Op::ConvTranspose2d(x, w, geom) => {
                let (dx, dw) = conv::conv_transpose2d_backward(geom, val(*x), val(*w), g);
                acc(*x, dx);
                acc(*w, dw);
            }
            Op::Reshape(a) => acc(*a, g.to_vec()),
            Op::Softmax(a) => {
                let n = node.value.shape()[1];
                let mut da = Vec::with_capacity(g.len());
                for (grow, yrow) in g.chunks(n).zip(out.chunks(n)) {
                    let dot: f64 = grow.iter().zip(yrow).map(|(x, y)| x * y).sum();
                    da.extend(grow.iter().zip(yrow).map(|(gv, y)| y * (gv - dot)));
                }
                acc(*a, da);
            }
            Op::LogSoftmax(a) => {
                let n = node.value.shape()[1];
                let mut da = Vec::with_capacity(g.len());
                for (grow, lrow) in g.chunks(n).zip(out.chunks(n)) {
                    let total: f64 = grow.iter().sum();
                    da.extend(grow.iter().zip(lrow).map(|(gv, l)| gv - l.exp() * total));
                }
                acc(*a, da);
            }
            Op::CrossEntropy(a, targets) => {
                let n = self.nodes[a.0].value.shape()[1];
                let m = targets.len() as f64;
                let mut da = row_softmax(val(*a), n);
                for (i, &t) in targets.iter().enumerate() {
                    da[i * n + t] -= 1.0;
                }
                for d in &mut da {
                    *d *= g[0] / m;
                }
                acc(*a, da);
            }
            Op::BceWithLogits(a, targets) => {
                let m = targets.len() as f64;
                let da = val(*a)
                    .iter()
                    .zip(targets)
                    .map(|(&x, &t)| (sigmoid(x) - t) * g[0] / m)
                    .collect();
                acc(*a, da);
            }
            Op::Mean(a) => {
                let n = self.nodes[a.0].value.len();
                acc(*a, vec![g[0] / n as f64; n]);
            }
            Op::Sum(a) => {
                let n = self.nodes[a.0].value.len();
                acc(*a, vec![g[0]; n]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn relu_clamps_negatives() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![-1.0, 0.0, 2.0]));
        let y = g.relu(x);
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut g = Graph::new();
        let x = g.constant(t(&[1, 2], &[0.0, 0.0]));
        let y = g.softmax(x).unwrap();
        assert_eq!(g.value(y).data(), &[0.5, 0.5]);
    }

    #[test]
    fn conv2d_ones_kernel_gives_window_sums() {
        // window sums of [[1,2,3],[4,5,6],[7,8,9]] computed by hand
        let mut g = Graph::new();
        let x = g.constant(t(&[1, 1, 3, 3], &[1., 2., 3., 4., 5., 6., 7., 8., 9.]));
        let w = g.constant(Tensor::ones(&[1, 1, 2, 2]));
        let y = g.conv2d(x, w, 1, 0).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 1, 2, 2]);
        assert_eq!(g.value(y).data(), &[12.0, 16.0, 24.0, 28.0]);
    }

    #[test]
    fn conv_transpose_output_size() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::ones(&[2, 3, 4, 4]));
        let w = g.constant(Tensor::ones(&[3, 5, 4, 4]));
        let y = g.conv_transpose2d(x, w, 2, 1).unwrap();
        assert_eq!(g.value(y).shape(), &[2, 5, 8, 8]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[4, 5]));
        let err = g.matmul(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("matmul") && msg.contains("[2, 3]") && msg.contains("[4, 5]"), "{msg}");
    }

    #[test]
    fn sum_gradient_is_all_ones() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::full(&[2, 3], 0.7), true);
        let s = g.sum(x);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap(), &Tensor::ones(&[2, 3]));
    }

    #[test]
    fn half_square_norm_gradient_is_identity() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, -2.0, 3.0]), true);
        let sq = g.mul(x, x).unwrap();
        let s = g.sum(sq);
        let loss = g.scale(s, 0.5);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[3]), true);
        assert!(matches!(g.backward(x), Err(TensorError::NonScalarLoss(_))));
    }

    #[test]
    fn unused_leaf_gets_zero_gradient() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, 2.0]), true);
        let unused = g.leaf(Tensor::vector(vec![5.0, 6.0, 7.0]), true);
        let loss = g.sum(x);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(unused).unwrap(), &Tensor::zeros(&[3]));
    }

    #[test]
    fn frozen_leaf_has_no_gradient_entry() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![1.0]));
        let y = g.leaf(Tensor::vector(vec![2.0]), true);
        let p = g.mul(x, y).unwrap();
        let loss = g.sum(p);
        let grads = g.backward(loss).unwrap();
        assert!(grads.get(x).is_none());
        assert_eq!(grads.get(y).unwrap().data(), &[1.0]);
    }

    #[test]
    fn add_bias_broadcasts_over_channels() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[1, 2, 1, 2]));
        let b = g.constant(Tensor::vector(vec![1.0, -1.0]));
        let y = g.add_bias(x, b).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn cross_entropy_of_uniform_logits_is_log_classes() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[2, 4]));
        let l = g.cross_entropy(x, &[0, 3]).unwrap();
        assert!((g.value(l).item().unwrap() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bce_with_logits_is_stable_for_large_inputs() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![800.0, -800.0]));
        let l = g.bce_with_logits(x, &[1.0, 0.0]).unwrap();
        assert_eq!(g.value(l).item().unwrap(), 0.0);
    }
}
