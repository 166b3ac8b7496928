use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }

    #[cfg(test)]
    pub(crate) fn from_raw(id: usize) -> Self {
        Var(id)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MulScalar(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Conv1d { input: Var, kernel: Var, stride: usize, padding: usize },
    Relu(Var),
    Sigmoid(Var),
    Sqrt(Var),
    Log2(Var),
    Reciprocal(Var),
    Square(Var),
    Sum(Var),
    Mean(Var),
    L1Norm(Var),
    Inner(Var, Var),
    MeanOverLength(Var),
    SumRows(Var),
    ScaleColumns(Var, Var),
    Mask(Var, Vec<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Append-only computation record; node order is a topological order.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn shape_err(op: &str, a: &[usize], b: &[usize]) -> Error {
    Error::Structural(format!("{op}: incompatible shapes {a:?} and {b:?}"))
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

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, requires_grad: bool) -> Result<Var> {
        if let Some(bad) = value.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite value {} produced by {}",
                value[bad],
                op_name(&op)
            )));
        }
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node { shape, value, op, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    /// Scalar value of a one-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    /// Leaf carrying the values of `t`; differentiable iff `t.requires_grad()`.
    pub fn tensor(&mut self, t: &Tensor) -> Result<Var> {
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, t.requires_grad())
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Result<Var> {
        let t = Tensor::new(shape, values)?;
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, false)
    }

    /// Differentiable leaf.
    pub fn variable(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Result<Var> {
        let t = Tensor::new(shape, values)?;
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, true)
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(op, sa, sb));
        }
        Ok(())
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op, name: &str) -> Result<Var> {
        self.same_shape(name, a, b)?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| f(x, y)).collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(self.shape(a).to_vec(), value, op, rg)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        let value = self.value(a).iter().map(|&x| f(x)).collect();
        let rg = self.rg(a);
        self.push(self.shape(a).to_vec(), value, op, rg)
    }

    fn reduce(&mut self, a: Var, value: f64, op: Op) -> Result<Var> {
        let rg = self.rg(a);
        self.push(vec![1], vec![value], op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b), "sub")
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b), "mul")
    }

    /// Multiplication by a constant.
    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.unary(a, |x| c * x, Op::Scale(a, c))
    }

    /// Every element of `a` times the one-element node `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(shape_err("mul_scalar", self.shape(a), self.shape(s)));
        }
        let c = self.scalar(s);
        let value = self.value(a).iter().map(|&x| x * c).collect();
        let rg = self.rg(a) || self.rg(s);
        self.push(self.shape(a).to_vec(), value, Op::MulScalar(a, s), rg)
    }

    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), &mut out, m, k, n);
        let rg = self.rg(a) || self.rg(b);
        self.push(vec![m, n], out, Op::MatMul(a, b), rg)
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::Structural(format!("transpose needs a matrix, got shape {s:?}")));
        }
        let (r, c) = (s[0], s[1]);
        let v = self.value(a);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = v[i * c + j];
            }
        }
        let rg = self.rg(a);
        self.push(vec![c, r], out, Op::Transpose(a), rg)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        if shape.iter().product::<usize>() != self.value(a).len() {
            return Err(shape_err("reshape", self.shape(a), &shape));
        }
        let value = self.value(a).to_vec();
        let rg = self.rg(a);
        self.push(shape, value, Op::Reshape(a), rg)
    }

    /// Cross-correlation of `input [c_in, len]` with `kernel [c_out, c_in, k]`
    /// under zero padding.
    pub fn conv1d(&mut self, input: Var, kernel: Var, stride: usize, padding: usize) -> Result<Var> {
        let (si, sk) = (self.shape(input).to_vec(), self.shape(kernel).to_vec());
        if si.len() != 2 || sk.len() != 3 || si[0] != sk[1] || stride == 0 {
            return Err(shape_err("conv1d", &si, &sk));
        }
        let (c_in, len) = (si[0], si[1]);
        let (c_out, k) = (sk[0], sk[2]);
        if len + 2 * padding < k {
            return Err(shape_err("conv1d", &si, &sk));
        }
        let out_len = (len + 2 * padding - k) / stride + 1;
        let x = self.value(input);
        let w = self.value(kernel);
        let mut out = vec![0.0; c_out * out_len];
        for o in 0..c_out {
            let row = &mut out[o * out_len..(o + 1) * out_len];
            for c in 0..c_in {
                let xc = &x[c * len..(c + 1) * len];
                for kk in 0..k {
                    let wv = w[(o * c_in + c) * k + kk];
                    if wv == 0.0 {
                        continue;
                    }
                    let (t0, t1) = valid_range(out_len, len, stride, kk, padding);
                    if stride == 1 {
                        let base = t0 + kk - padding;
                        for (r, &xv) in row[t0..t1].iter_mut().zip(&xc[base..base + (t1 - t0)]) {
                            *r += wv * xv;
                        }
                    } else {
                        for t in t0..t1 {
                            row[t] += wv * xc[t * stride + kk - padding];
                        }
                    }
                }
            }
        }
        let rg = self.rg(input) || self.rg(kernel);
        self.push(vec![c_out, out_len], out, Op::Conv1d { input, kernel, stride, padding }, rg)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.unary(a, f64::sqrt, Op::Sqrt(a))
    }

    pub fn log2(&mut self, a: Var) -> Result<Var> {
        self.unary(a, f64::log2, Op::Log2(a))
    }

    pub fn reciprocal(&mut self, a: Var) -> Result<Var> {
        self.unary(a, f64::recip, Op::Reciprocal(a))
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).iter().sum();
        self.reduce(a, s, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        self.reduce(a, m, Op::Mean(a))
    }

    pub fn l1_norm(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).iter().map(|x| x.abs()).sum();
        self.reduce(a, s, Op::L1Norm(a))
    }

    pub fn inner_product(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("inner_product", a, b)?;
        let s = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        let rg = self.rg(a) || self.rg(b);
        self.push(vec![1], vec![s], Op::Inner(a, b), rg)
    }

    /// Global average pooling `[c, len] -> [c]`.
    pub fn mean_over_length(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::Structural(format!("pooling needs [channels, length], got {s:?}")));
        }
        let (c, len) = (s[0], s[1]);
        let value = self.value(a).chunks(len).map(|r| r.iter().sum::<f64>() / len as f64).collect();
        let rg = self.rg(a);
        self.push(vec![c], value, Op::MeanOverLength(a), rg)
    }

    /// Column sums `[r, c] -> [c]`.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::Structural(format!("sum_rows needs a matrix, got {s:?}")));
        }
        let c = s[1];
        let mut out = vec![0.0; c];
        for row in self.value(a).chunks(c) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        let rg = self.rg(a);
        self.push(vec![c], out, Op::SumRows(a), rg)
    }

    /// `out[i][j] = a[i][j] * s[j]` for `a [r, c]`, `s [c]`.
    pub fn scale_columns(&mut self, a: Var, s: Var) -> Result<Var> {
        let (sa, ss) = (self.shape(a), self.shape(s));
        if sa.len() != 2 || ss.iter().product::<usize>() != sa[1] {
            return Err(shape_err("scale_columns", sa, ss));
        }
        let c = sa[1];
        let sv = self.value(s);
        let value = self.value(a).chunks(c).flat_map(|row| row.iter().zip(sv).map(|(x, y)| x * y)).collect();
        let rg = self.rg(a) || self.rg(s);
        self.push(sa.to_vec(), value, Op::ScaleColumns(a, s), rg)
    }

    /// Identity forward; the backward pass multiplies the incoming gradient
    /// by `mask` (false blocks, true passes).
    pub fn stop_gradient_mask(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        if mask.len() != self.value(a).len() {
            return Err(Error::Structural(format!(
                "mask of length {} for tensor of shape {:?}",
                mask.len(),
                self.shape(a)
            )));
        }
        let m = mask.iter().map(|&b| f64::from(u8::from(b))).collect();
        let value = self.value(a).to_vec();
        let rg = self.rg(a);
        self.push(self.shape(a).to_vec(), value, Op::Mask(a, m), rg)
    }

    /// Reverse sweep from a one-element `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Usage("backward on an empty graph".into()));
        }
        if self.value(loss).len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            if !self.nodes[id].requires_grad {
                continue;
            }
            self.propagate(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    /// Gradient of the last [`backward`](Self::backward) loss with respect
    /// to `v`; zeros when `v` did not participate.
    pub fn grad(&self, v: Var) -> Vec<f64> {
        match self.grads.get(v.0) {
            Some(Some(g)) => g.clone(),
            _ => vec![0.0; self.value(v).len()],
        }
    }

    fn propagate(&self, id: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[id];
        let mut send = |v: Var, delta: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            let buf = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].value.len()]);
            delta(buf);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                send(*a, &mut |buf| add_into(buf, g));
                send(*b, &mut |buf| add_into(buf, g));
            }
            Op::Sub(a, b) => {
                send(*a, &mut |buf| add_into(buf, g));
                send(*b, &mut |buf| buf.iter_mut().zip(g).for_each(|(o, d)| *o -= d));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                send(*a, &mut |buf| {
                    buf.iter_mut().zip(g).zip(vb).for_each(|((o, d), y)| *o += d * y)
                });
                send(*b, &mut |buf| {
                    buf.iter_mut().zip(g).zip(va).for_each(|((o, d), x)| *o += d * x)
                });
            }
            Op::Scale(a, c) => send(*a, &mut |buf| buf.iter_mut().zip(g).for_each(|(o, d)| *o += c * d)),
            Op::MulScalar(a, s) => {
                let c = self.scalar(*s);
                let va = self.value(*a);
                send(*a, &mut |buf| buf.iter_mut().zip(g).for_each(|(o, d)| *o += c * d));
                send(*s, &mut |buf| buf[0] += g.iter().zip(va).map(|(d, x)| d * x).sum::<f64>());
            }
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                let (va, vb) = (self.value(*a), self.value(*b));
                // dA = G B^T, dB = A^T G
                send(*a, &mut |buf| {
                    for i in 0..m {
                        for j in 0..n {
                            let d = g[i * n + j];
                            if d == 0.0 {
                                continue;
                            }
                            for p in 0..k {
                                buf[i * k + p] += d * vb[p * n + j];
                            }
                        }
                    }
                });
                send(*b, &mut |buf| {
                    for i in 0..m {
                        for p in 0..k {
                            let x = va[i * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            let row = &mut buf[p * n..(p + 1) * n];
                            row.iter_mut().zip(&g[i * n..(i + 1) * n]).for_each(|(o, d)| *o += x * d);
                        }
                    }
                });
            }
            Op::Transpose(a) => {
                let (r, c) = (self.shape(*a)[0], self.shape(*a)[1]);
                send(*a, &mut |buf| {
                    for i in 0..r {
                        for j in 0..c {
                            buf[i * c + j] += g[j * r + i];
                        }
                    }
                });
            }
            Op::Reshape(a) => send(*a, &mut |buf| add_into(buf, g)),
            Op::Conv1d { input, kernel, stride, padding } => {
                let (stride, padding) = (*stride, *padding);
                let si = self.shape(*input);
                let sk = self.shape(*kernel);
                let (c_in, len) = (si[0], si[1]);
                let (c_out, k) = (sk[0], sk[2]);
                let out_len = node.shape[1];
                let x = self.value(*input);
                let w = self.value(*kernel);
                send(*input, &mut |buf| {
                    for o in 0..c_out {
                        let go = &g[o * out_len..(o + 1) * out_len];
                        for c in 0..c_in {
                            let bc = &mut buf[c * len..(c + 1) * len];
                            for kk in 0..k {
                                let wv = w[(o * c_in + c) * k + kk];
                                if wv == 0.0 {
                                    continue;
                                }
                                let (t0, t1) = valid_range(out_len, len, stride, kk, padding);
                                if stride == 1 {
                                    let base = t0 + kk - padding;
                                    for (b, &d) in bc[base..base + (t1 - t0)].iter_mut().zip(&go[t0..t1]) {
                                        *b += wv * d;
                                    }
                                } else {
                                    for t in t0..t1 {
                                        bc[t * stride + kk - padding] += wv * go[t];
                                    }
                                }
                            }
                        }
                    }
                });
                send(*kernel, &mut |buf| {
                    for o in 0..c_out {
                        let go = &g[o * out_len..(o + 1) * out_len];
                        for c in 0..c_in {
                            let xc = &x[c * len..(c + 1) * len];
                            for kk in 0..k {
                                let (t0, t1) = valid_range(out_len, len, stride, kk, padding);
                                let acc: f64 = if stride == 1 {
                                    let base = t0 + kk - padding;
                                    go[t0..t1].iter().zip(&xc[base..base + (t1 - t0)]).map(|(d, v)| d * v).sum()
                                } else {
                                    (t0..t1).map(|t| go[t] * xc[t * stride + kk - padding]).sum()
                                };
                                buf[(o * c_in + c) * k + kk] += acc;
                            }
                        }
                    }
                });
            }
            Op::Relu(a) => {
                let va = self.value(*a);
                send(*a, &mut |buf| {
                    buf.iter_mut().zip(g).zip(va).for_each(|((o, d), x)| {
                        if *x > 0.0 {
                            *o += d
                        }
                    })
                });
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                send(*a, &mut |buf| {
                    buf.iter_mut().zip(g).zip(y).for_each(|((o, d), s)| *o += d * s * (1.0 - s))
                });
            }
            Op::Sqrt(a) => {
                let y = &node.value;
                send(*a, &mut |buf| buf.iter_mut().zip(g).zip(y).for_each(|((o, d), s)| *o += d * 0.5 / s));
            }
            Op::Log2(a) => {
                let va = self.value(*a);
                send(*a, &mut |buf| {
                    buf.iter_mut()
                        .zip(g)
                        .zip(va)
                        .for_each(|((o, d), x)| *o += d / (x * std::f64::consts::LN_2))
                });
            }
            Op::Reciprocal(a) => {
                let y = &node.value;
                send(*a, &mut |buf| buf.iter_mut().zip(g).zip(y).for_each(|((o, d), r)| *o -= d * r * r));
            }
            Op::Square(a) => {
                let va = self.value(*a);
                send(*a, &mut |buf| buf.iter_mut().zip(g).zip(va).for_each(|((o, d), x)| *o += 2.0 * d * x));
            }
            Op::Sum(a) => send(*a, &mut |buf| buf.iter_mut().for_each(|o| *o += g[0])),
            Op::Mean(a) => {
                let n = self.value(*a).len() as f64;
                send(*a, &mut |buf| buf.iter_mut().for_each(|o| *o += g[0] / n));
            }
            Op::L1Norm(a) => {
                let va = self.value(*a);
                send(*a, &mut |buf| {
                    buf.iter_mut().zip(va).for_each(|(o, x)| *o += g[0] * sign(*x))
                });
            }
            Op::Inner(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                send(*a, &mut |buf| buf.iter_mut().zip(vb).for_each(|(o, y)| *o += g[0] * y));
                send(*b, &mut |buf| buf.iter_mut().zip(va).for_each(|(o, x)| *o += g[0] * x));
            }
            Op::MeanOverLength(a) => {
                let len = self.shape(*a)[1];
                send(*a, &mut |buf| {
                    for (row, d) in buf.chunks_mut(len).zip(g) {
                        row.iter_mut().for_each(|o| *o += d / len as f64);
                    }
                });
            }
            Op::SumRows(a) => {
                let c = self.shape(*a)[1];
                send(*a, &mut |buf| buf.chunks_mut(c).for_each(|row| add_into(row, g)));
            }
            Op::ScaleColumns(a, s) => {
                let c = self.shape(*a)[1];
                let (va, vs) = (self.value(*a), self.value(*s));
                send(*a, &mut |buf| {
                    for (row, grow) in buf.chunks_mut(c).zip(g.chunks(c)) {
                        row.iter_mut().zip(grow).zip(vs).for_each(|((o, d), y)| *o += d * y);
                    }
                });
                send(*s, &mut |buf| {
                    for (xrow, grow) in va.chunks(c).zip(g.chunks(c)) {
                        buf.iter_mut().zip(grow).zip(xrow).for_each(|((o, d), x)| *o += d * x);
                    }
                });
            }
            Op::Mask(a, m) => {
                send(*a, &mut |buf| buf.iter_mut().zip(g).zip(m).for_each(|((o, d), k)| *o += d * k));
            }
        }
    }
}

/// Output positions `t` whose tap `kk` reads inside the unpadded input.
#[inline]
fn valid_range(out_len: usize, len: usize, stride: usize, kk: usize, padding: usize) -> (usize, usize) {
    // need 0 <= t*stride + kk - padding < len
    let t0 = if kk >= padding { 0 } else { (padding - kk).div_ceil(stride) };
    let t1 = if len + padding > kk { ((len + padding - kk - 1) / stride + 1).min(out_len) } else { 0 };
    (t0.min(t1), t1)
}

fn add_into(buf: &mut [f64], g: &[f64]) {
    buf.iter_mut().zip(g).for_each(|(o, d)| *o += d);
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
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

pub(crate) fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            row.iter_mut().zip(&b[p * n..(p + 1) * n]).for_each(|(o, y)| *o += x * y);
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::Scale(..) => "scale",
        Op::MulScalar(..) => "mul_scalar",
        Op::MatMul(..) => "matmul",
        Op::Transpose(..) => "transpose",
        Op::Reshape(..) => "reshape",
        Op::Conv1d { .. } => "conv1d",
        Op::Relu(..) => "relu",
        Op::Sigmoid(..) => "sigmoid",
        Op::Sqrt(..) => "sqrt",
        Op::Log2(..) => "log2",
        Op::Reciprocal(..) => "reciprocal",
        Op::Square(..) => "square",
        Op::Sum(..) => "sum",
        Op::Mean(..) => "mean",
        Op::L1Norm(..) => "l1_norm",
        Op::Inner(..) => "inner_product",
        Op::MeanOverLength(..) => "mean_over_length",
        Op::SumRows(..) => "sum_rows",
        Op::ScaleColumns(..) => "scale_columns",
        Op::Mask(..) => "stop_gradient_mask",
    }
}
