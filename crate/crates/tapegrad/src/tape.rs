//! Wengert tape: forward kernels record onto a linear tape, `backward`
//! replays it in reverse. Every kernel has an exact analytic adjoint.
//!
//! Shape errors are programming errors and panic with the offending shapes;
//! all fallible-by-data conditions (non-scalar loss) return through asserts
//! at the single public entry points.

use rand::Rng;

use crate::data::Data;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Running statistics for batch standardization.
#[derive(Debug, Clone)]
pub struct BnState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BnState {
    pub fn new(dim: usize) -> Self {
        BnState {
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.1,
            eps: 1e-5,
        }
    }
}

const LN_FLOOR: f64 = 1e-300;

enum Op {
    Leaf,
    Matmul(Var, Var),
    /// y = M v
    Matvec(Var, Var),
    /// y = Mᵀ v
    MatvecT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// elementwise multiply by a scalar node
    MulScalar(Var, Var),
    Concat(Vec<Var>),
    Stack(Vec<Var>),
    Row(Var, usize),
    Slice(Var, usize),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    /// 1-D softmax over unmasked entries; masked entries are exactly zero
    SoftmaxMasked(Var, Vec<bool>),
    /// independent softmax per row of a rank-2 tensor
    SoftmaxRows(Var),
    Inner(Var, Var),
    Sum(Var),
    Select(Var, usize),
    Ln(Var),
    /// rows of `table` gathered by token id
    Embedding(Var, Vec<usize>),
    /// saved mask entries are 0 or 1/(1-p) (inverted dropout)
    Dropout(Var, Vec<f64>),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        batch_stats: bool,
    },
}

struct Node {
    value: Data,
    op: Op,
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Grads {
    g: Vec<Vec<f64>>,
}

impl Grads {
    pub fn get(&self, v: Var) -> &[f64] {
        &self.g[v.0]
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Data {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Data, op: Op) -> Var {
        debug_assert!(value.all_finite(), "non-finite value produced on tape");
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    // ── leaves ──────────────────────────────────────────────────────

    pub fn leaf(&mut self, value: Data) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, v: f64) -> Var {
        self.leaf(Data::scalar(v))
    }

    pub fn constant(&mut self, value: Data) -> Var {
        self.leaf(value)
    }

    /// Copies the value onto a fresh leaf: gradients stop here and never
    /// reach the nodes upstream of `v`.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.leaf(value)
    }

    // ── kernels ─────────────────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (da, db) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(
            da.shape.len() == 2 && db.shape.len() == 2 && da.cols() == db.rows(),
            "matmul shape mismatch: {:?} x {:?}",
            da.shape,
            db.shape
        );
        let (m, k, n) = (da.rows(), da.cols(), db.cols());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = da.values[i * k + p];
                for j in 0..n {
                    out[i * n + j] += aip * db.values[p * n + j];
                }
            }
        }
        self.push(Data::matrix(m, n, out), Op::Matmul(a, b))
    }

    pub fn matvec(&mut self, m: Var, v: Var) -> Var {
        let (dm, dv) = (&self.nodes[m.0].value, &self.nodes[v.0].value);
        assert!(
            dm.shape.len() == 2 && dv.shape.len() == 1 && dm.cols() == dv.len(),
            "matvec shape mismatch: {:?} x {:?}",
            dm.shape,
            dv.shape
        );
        let (rows, cols) = (dm.rows(), dm.cols());
        let mut out = vec![0.0; rows];
        for i in 0..rows {
            let mut acc = 0.0;
            for j in 0..cols {
                acc += dm.values[i * cols + j] * dv.values[j];
            }
            out[i] = acc;
        }
        self.push(Data::vector(out), Op::Matvec(m, v))
    }

    pub fn matvec_t(&mut self, m: Var, v: Var) -> Var {
        let (dm, dv) = (&self.nodes[m.0].value, &self.nodes[v.0].value);
        assert!(
            dm.shape.len() == 2 && dv.shape.len() == 1 && dm.rows() == dv.len(),
            "matvec_t shape mismatch: {:?}ᵀ x {:?}",
            dm.shape,
            dv.shape
        );
        let (rows, cols) = (dm.rows(), dm.cols());
        let mut out = vec![0.0; cols];
        for i in 0..rows {
            let vi = dv.values[i];
            for j in 0..cols {
                out[j] += dm.values[i * cols + j] * vi;
            }
        }
        self.push(Data::vector(out), Op::MatvecT(m, v))
    }

    fn binary_elementwise(&self, a: Var, b: Var, name: &str) -> Vec<usize> {
        let (da, db) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(
            da.shape, db.shape,
            "{name} shape mismatch: {:?} vs {:?}",
            da.shape, db.shape
        );
        da.shape.clone()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let shape = self.binary_elementwise(a, b, "add");
        let out: Vec<f64> = self.nodes[a.0]
            .value
            .values
            .iter()
            .zip(&self.nodes[b.0].value.values)
            .map(|(x, y)| x + y)
            .collect();
        self.push(Data { shape, values: out }, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let shape = self.binary_elementwise(a, b, "sub");
        let out: Vec<f64> = self.nodes[a.0]
            .value
            .values
            .iter()
            .zip(&self.nodes[b.0].value.values)
            .map(|(x, y)| x - y)
            .collect();
        self.push(Data { shape, values: out }, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let shape = self.binary_elementwise(a, b, "mul");
        let out: Vec<f64> = self.nodes[a.0]
            .value
            .values
            .iter()
            .zip(&self.nodes[b.0].value.values)
            .map(|(x, y)| x * y)
            .collect();
        self.push(Data { shape, values: out }, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let d = &self.nodes[a.0].value;
        let out = Data {
            shape: d.shape.clone(),
            values: d.values.iter().map(|x| x * c).collect(),
        };
        self.push(out, Op::Scale(a, c))
    }

    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Var {
        let sv = self.nodes[s.0].value.clone();
        assert!(sv.is_scalar(), "mul_scalar: rhs has shape {:?}", sv.shape);
        let d = &self.nodes[a.0].value;
        let out = Data {
            shape: d.shape.clone(),
            values: d.values.iter().map(|x| x * sv.item()).collect(),
        };
        self.push(out, Op::MulScalar(a, s))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let mut out = Vec::new();
        for p in parts {
            let d = &self.nodes[p.0].value;
            assert_eq!(d.shape.len(), 1, "concat expects rank-1 parts, got {:?}", d.shape);
            out.extend_from_slice(&d.values);
        }
        self.push(Data::vector(out), Op::Concat(parts.to_vec()))
    }

    pub fn stack(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "stack of zero rows");
        let cols = self.nodes[rows[0].0].value.len();
        let mut out = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let d = &self.nodes[r.0].value;
            assert!(
                d.shape.len() == 1 && d.len() == cols,
                "stack row shape mismatch: {:?} vs expected [{cols}]",
                d.shape
            );
            out.extend_from_slice(&d.values);
        }
        self.push(Data::matrix(rows.len(), cols, out), Op::Stack(rows.to_vec()))
    }

    pub fn row(&mut self, m: Var, i: usize) -> Var {
        let d = &self.nodes[m.0].value;
        assert!(
            d.shape.len() == 2 && i < d.rows(),
            "row {i} out of range for shape {:?}",
            d.shape
        );
        let cols = d.cols();
        let out = d.values[i * cols..(i + 1) * cols].to_vec();
        self.push(Data::vector(out), Op::Row(m, i))
    }

    pub fn slice(&mut self, v: Var, start: usize, len: usize) -> Var {
        let d = &self.nodes[v.0].value;
        assert!(
            d.shape.len() == 1 && start + len <= d.len(),
            "slice [{start}, {start}+{len}) out of range for shape {:?}",
            d.shape
        );
        let out = d.values[start..start + len].to_vec();
        self.push(Data::vector(out), Op::Slice(v, start))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let d = &self.nodes[a.0].value;
        let out = Data {
            shape: d.shape.clone(),
            values: d.values.iter().map(|x| f(*x)).collect(),
        };
        self.push(out, op)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(LN_FLOOR).ln(), Op::Ln(a))
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].value.len();
        self.softmax_masked(a, &vec![true; n])
    }

    pub fn softmax_masked(&mut self, a: Var, mask: &[bool]) -> Var {
        let d = &self.nodes[a.0].value;
        assert!(
            d.shape.len() == 1 && d.len() == mask.len(),
            "softmax mask length {} vs shape {:?}",
            mask.len(),
            d.shape
        );
        assert!(mask.iter().any(|m| *m), "softmax with all entries masked");
        let max = d
            .values
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = vec![0.0; d.len()];
        let mut denom = 0.0;
        for i in 0..d.len() {
            if mask[i] {
                out[i] = (d.values[i] - max).exp();
                denom += out[i];
            }
        }
        for o in &mut out {
            *o /= denom;
        }
        self.push(Data::vector(out), Op::SoftmaxMasked(a, mask.to_vec()))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let d = &self.nodes[a.0].value;
        assert_eq!(d.shape.len(), 2, "softmax_rows expects rank 2, got {:?}", d.shape);
        let (rows, cols) = (d.rows(), d.cols());
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            let row = &d.values[r * cols..(r + 1) * cols];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for c in 0..cols {
                let e = (row[c] - max).exp();
                out[r * cols + c] = e;
                denom += e;
            }
            for c in 0..cols {
                out[r * cols + c] /= denom;
            }
        }
        self.push(Data::matrix(rows, cols, out), Op::SoftmaxRows(a))
    }

    pub fn inner(&mut self, a: Var, b: Var) -> Var {
        let (da, db) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(
            da.shape.len() == 1 && da.shape == db.shape,
            "inner shape mismatch: {:?} vs {:?}",
            da.shape,
            db.shape
        );
        let v = da.values.iter().zip(&db.values).map(|(x, y)| x * y).sum();
        self.push(Data::scalar(v), Op::Inner(a, b))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.values.iter().sum();
        self.push(Data::scalar(v), Op::Sum(a))
    }

    pub fn select(&mut self, a: Var, i: usize) -> Var {
        let d = &self.nodes[a.0].value;
        assert!(i < d.len(), "select index {i} out of range for shape {:?}", d.shape);
        let v = d.values[i];
        self.push(Data::scalar(v), Op::Select(a, i))
    }

    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Var {
        let d = &self.nodes[table.0].value;
        assert_eq!(d.shape.len(), 2, "embedding table must be rank 2, got {:?}", d.shape);
        assert!(!ids.is_empty(), "embedding lookup with no ids");
        let (vocab, dim) = (d.rows(), d.cols());
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            assert!(id < vocab, "token id {id} out of vocabulary size {vocab}");
            out.extend_from_slice(&d.values[id * dim..(id + 1) * dim]);
        }
        self.push(Data::matrix(ids.len(), dim, out), Op::Embedding(table, ids.to_vec()))
    }

    /// Inverted dropout: kept entries are scaled by 1/(1-ratio) so inference
    /// needs no rescaling. Identity when not training or ratio is zero.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        ratio: f64,
        training: bool,
        rng: &mut R,
    ) -> Var {
        assert!((0.0..1.0).contains(&ratio), "dropout ratio {ratio} outside [0, 1)");
        if !training || ratio == 0.0 {
            return a;
        }
        let d = &self.nodes[a.0].value;
        let keep = 1.0 - ratio;
        let mask: Vec<f64> = (0..d.len())
            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let out = Data {
            shape: d.shape.clone(),
            values: d.values.iter().zip(&mask).map(|(x, m)| x * m).collect(),
        };
        self.push(out, Op::Dropout(a, mask))
    }

    /// Per-feature standardization over the rows of `x` ([N, D]). Training
    /// mode uses batch statistics and folds them into `state` (momentum
    /// update); eval mode standardizes with the running statistics.
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        state: &mut BnState,
        training: bool,
    ) -> Var {
        let d = &self.nodes[x.0].value;
        assert_eq!(d.shape.len(), 2, "batch_norm expects rank 2, got {:?}", d.shape);
        let (n, dim) = (d.rows(), d.cols());
        let gd = &self.nodes[gamma.0].value;
        let bd = &self.nodes[beta.0].value;
        assert!(
            gd.len() == dim && bd.len() == dim,
            "batch_norm affine shapes {:?}/{:?} vs feature dim {dim}",
            gd.shape,
            bd.shape
        );
        assert_eq!(state.running_mean.len(), dim, "batch_norm state dim mismatch");

        let (mean, var) = if training {
            let mut mean = vec![0.0; dim];
            for r in 0..n {
                for c in 0..dim {
                    mean[c] += d.values[r * dim + c];
                }
            }
            for m in &mut mean {
                *m /= n as f64;
            }
            let mut var = vec![0.0; dim];
            for r in 0..n {
                for c in 0..dim {
                    let diff = d.values[r * dim + c] - mean[c];
                    var[c] += diff * diff;
                }
            }
            for v in &mut var {
                *v /= n as f64;
            }
            for c in 0..dim {
                state.running_mean[c] =
                    (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
                state.running_var[c] =
                    (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c];
            }
            (mean, var)
        } else {
            (state.running_mean.clone(), state.running_var.clone())
        };

        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + state.eps).sqrt()).collect();
        let mut xhat = vec![0.0; n * dim];
        let mut out = vec![0.0; n * dim];
        for r in 0..n {
            for c in 0..dim {
                let h = (d.values[r * dim + c] - mean[c]) * inv_std[c];
                xhat[r * dim + c] = h;
                out[r * dim + c] = gd.values[c] * h + bd.values[c];
            }
        }
        self.push(
            Data::matrix(n, dim, out),
            Op::BatchNorm { x, gamma, beta, xhat, inv_std, batch_stats: training },
        )
    }

    // ── reverse pass ────────────────────────────────────────────────

    /// Populates ∂loss/∂node for every node on the tape. `loss` must be a
    /// scalar. Each node is visited exactly once, in reverse tape order.
    pub fn backward(&self, loss: Var) -> Grads {
        assert!(
            self.nodes[loss.0].value.is_scalar(),
            "backward: loss has shape {:?}, expected a scalar",
            self.nodes[loss.0].value.shape
        );
        let mut g: Vec<Vec<f64>> =
            self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        g[loss.0][0] = 1.0;

        for idx in (0..=loss.0).rev() {
            if g[idx].iter().all(|x| *x == 0.0) {
                continue;
            }
            let node = &self.nodes[idx];
            let out_grad = std::mem::take(&mut g[idx]);
            match &node.op {
                Op::Leaf => {
                    g[idx] = out_grad;
                    continue;
                }
                Op::Matmul(a, b) => {
                    let (da, db) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (da.rows(), da.cols(), db.cols());
                    for i in 0..m {
                        for p in 0..k {
                            let mut acc = 0.0;
                            for j in 0..n {
                                acc += out_grad[i * n + j] * db.values[p * n + j];
                            }
                            g[a.0][i * k + p] += acc;
                        }
                    }
                    for p in 0..k {
                        for j in 0..n {
                            let mut acc = 0.0;
                            for i in 0..m {
                                acc += da.values[i * k + p] * out_grad[i * n + j];
                            }
                            g[b.0][p * n + j] += acc;
                        }
                    }
                }
                Op::Matvec(m, v) => {
                    let (dm, dv) = (&self.nodes[m.0].value, &self.nodes[v.0].value);
                    let (rows, cols) = (dm.rows(), dm.cols());
                    for i in 0..rows {
                        let gi = out_grad[i];
                        for j in 0..cols {
                            g[m.0][i * cols + j] += gi * dv.values[j];
                            g[v.0][j] += gi * dm.values[i * cols + j];
                        }
                    }
                }
                Op::MatvecT(m, v) => {
                    let (dm, dv) = (&self.nodes[m.0].value, &self.nodes[v.0].value);
                    let (rows, cols) = (dm.rows(), dm.cols());
                    for i in 0..rows {
                        let vi = dv.values[i];
                        let mut acc = 0.0;
                        for j in 0..cols {
                            g[m.0][i * cols + j] += vi * out_grad[j];
                            acc += dm.values[i * cols + j] * out_grad[j];
                        }
                        g[v.0][i] += acc;
                    }
                }
                Op::Add(a, b) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        g[a.0][i] += og;
                        g[b.0][i] += og;
                    }
                }
                Op::Sub(a, b) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        g[a.0][i] += og;
                        g[b.0][i] -= og;
                    }
                }
                Op::Mul(a, b) => {
                    let (da, db) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    for (i, og) in out_grad.iter().enumerate() {
                        g[a.0][i] += og * db.values[i];
                        g[b.0][i] += og * da.values[i];
                    }
                }
                Op::Scale(a, c) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        g[a.0][i] += og * c;
                    }
                }
                Op::MulScalar(a, s) => {
                    let da = &self.nodes[a.0].value;
                    let sv = self.nodes[s.0].value.item();
                    let mut acc = 0.0;
                    for (i, og) in out_grad.iter().enumerate() {
                        g[a.0][i] += og * sv;
                        acc += og * da.values[i];
                    }
                    g[s.0][0] += acc;
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.len();
                        for i in 0..len {
                            g[p.0][i] += out_grad[offset + i];
                        }
                        offset += len;
                    }
                }
                Op::Stack(rows) => {
                    let cols = self.nodes[rows[0].0].value.len();
                    for (r, part) in rows.iter().enumerate() {
                        for c in 0..cols {
                            g[part.0][c] += out_grad[r * cols + c];
                        }
                    }
                }
                Op::Row(m, i) => {
                    let cols = self.nodes[m.0].value.cols();
                    for c in 0..cols {
                        g[m.0][i * cols + c] += out_grad[c];
                    }
                }
                Op::Slice(v, start) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        g[v.0][start + i] += og;
                    }
                }
                Op::Sigmoid(a) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        let y = node.value.values[i];
                        g[a.0][i] += og * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        let y = node.value.values[i];
                        g[a.0][i] += og * (1.0 - y * y);
                    }
                }
                Op::Relu(a) => {
                    let da = &self.nodes[a.0].value;
                    for (i, og) in out_grad.iter().enumerate() {
                        if da.values[i] > 0.0 {
                            g[a.0][i] += og;
                        }
                    }
                }
                Op::Ln(a) => {
                    let da = &self.nodes[a.0].value;
                    for (i, og) in out_grad.iter().enumerate() {
                        if da.values[i] > LN_FLOOR {
                            g[a.0][i] += og / da.values[i];
                        }
                    }
                }
                Op::SoftmaxMasked(a, mask) => {
                    let y = &node.value.values;
                    let dot: f64 = out_grad
                        .iter()
                        .zip(y)
                        .zip(mask)
                        .filter(|(_, m)| **m)
                        .map(|((og, yi), _)| og * yi)
                        .sum();
                    for i in 0..y.len() {
                        if mask[i] {
                            g[a.0][i] += y[i] * (out_grad[i] - dot);
                        }
                    }
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let (rows, cols) = (y.rows(), y.cols());
                    for r in 0..rows {
                        let mut dot = 0.0;
                        for c in 0..cols {
                            dot += out_grad[r * cols + c] * y.values[r * cols + c];
                        }
                        for c in 0..cols {
                            let yi = y.values[r * cols + c];
                            g[a.0][r * cols + c] += yi * (out_grad[r * cols + c] - dot);
                        }
                    }
                }
                Op::Inner(a, b) => {
                    let (da, db) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let og = out_grad[0];
                    for i in 0..da.len() {
                        g[a.0][i] += og * db.values[i];
                        g[b.0][i] += og * da.values[i];
                    }
                }
                Op::Sum(a) => {
                    let og = out_grad[0];
                    for gi in g[a.0].iter_mut() {
                        *gi += og;
                    }
                }
                Op::Select(a, i) => {
                    g[a.0][*i] += out_grad[0];
                }
                Op::Embedding(table, ids) => {
                    let dim = self.nodes[table.0].value.cols();
                    for (r, &id) in ids.iter().enumerate() {
                        for c in 0..dim {
                            g[table.0][id * dim + c] += out_grad[r * dim + c];
                        }
                    }
                }
                Op::Dropout(a, mask) => {
                    for (i, og) in out_grad.iter().enumerate() {
                        g[a.0][i] += og * mask[i];
                    }
                }
                Op::BatchNorm { x, gamma, beta, xhat, inv_std, batch_stats } => {
                    let dim = inv_std.len();
                    let n = xhat.len() / dim;
                    let gd = &self.nodes[gamma.0].value;
                    for c in 0..dim {
                        let mut sum_dy = 0.0;
                        let mut sum_dy_xhat = 0.0;
                        for r in 0..n {
                            let dy = out_grad[r * dim + c];
                            sum_dy += dy;
                            sum_dy_xhat += dy * xhat[r * dim + c];
                        }
                        g[gamma.0][c] += sum_dy_xhat;
                        g[beta.0][c] += sum_dy;
                        let gscale = gd.values[c] * inv_std[c];
                        if *batch_stats {
                            let nf = n as f64;
                            for r in 0..n {
                                let dy = out_grad[r * dim + c];
                                g[x.0][r * dim + c] += gscale
                                    * (dy - sum_dy / nf - xhat[r * dim + c] * sum_dy_xhat / nf);
                            }
                        } else {
                            for r in 0..n {
                                g[x.0][r * dim + c] += gscale * out_grad[r * dim + c];
                            }
                        }
                    }
                }
            }
            g[idx] = out_grad;
        }
        Grads { g }
    }
}
