//! Reverse-mode differentiation over row-major f64 matrices.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length");
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// `out += a * b` for `a: n x k`, `b: k x m`.
fn matmul_acc(a: &[f64], b: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let o = &mut out[i * m..(i + 1) * m];
        for (p, &x) in a[i * k..(i + 1) * k].iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (y, &w) in o.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *y += x * w;
            }
        }
    }
}

/// `out += a^T * b` for `a: k x n`, `b: k x m`.
fn matmul_tn_acc(a: &[f64], b: &[f64], out: &mut [f64], k: usize, n: usize, m: usize) {
    for p in 0..k {
        let brow = &b[p * m..(p + 1) * m];
        for i in 0..n {
            let x = a[p * n + i];
            if x == 0.0 {
                continue;
            }
            for (y, &w) in out[i * m..(i + 1) * m].iter_mut().zip(brow) {
                *y += x * w;
            }
        }
    }
}

/// `out += a * b^T` for `a: n x m`, `b: k x m`.
fn matmul_nt_acc(a: &[f64], b: &[f64], out: &mut [f64], n: usize, m: usize, k: usize) {
    for i in 0..n {
        let arow = &a[i * m..(i + 1) * m];
        for j in 0..k {
            let brow = &b[j * m..(j + 1) * m];
            out[i * k + j] += arow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const LN_EPS: f64 = 1e-5;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Token layout for attention: independent blocks of consecutive rows.
#[derive(Debug, Clone)]
pub struct AttnLayout {
    pub heads: usize,
    pub blocks: Vec<(usize, usize)>,
    /// Per token, whether it may be attended to.
    pub key_valid: Vec<bool>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    AddBias(usize, usize),
    Add(usize, usize),
    Scale(usize, f64),
    RowScale(usize, Vec<f64>),
    Gelu(usize),
    LayerNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Gather {
        sources: Vec<usize>,
        index: Vec<(usize, usize)>,
    },
    MeanRows(usize),
    PairBias {
        proj: usize,
        pairs: Vec<(usize, usize, usize)>,
        n: usize,
    },
    Attention {
        q: usize,
        k: usize,
        v: usize,
        bias: Option<usize>,
        layout: AttnLayout,
        /// Per (block, head, query): softmax over the block's valid keys.
        probs: Vec<Vec<f64>>,
    },
    MaskedMse {
        pred: usize,
        target: Vec<f64>,
        mask: Vec<u8>,
        weights: Vec<f64>,
    },
    SoftmaxCe {
        logits: usize,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "input",
            Op::MatMul(..) => "matmul",
            Op::AddBias(..) => "bias add",
            Op::Add(..) => "residual add",
            Op::Scale(..) => "scale",
            Op::RowScale(..) => "row scale",
            Op::Gelu(..) => "gelu",
            Op::LayerNorm { .. } => "layer norm",
            Op::Gather { .. } => "gather",
            Op::MeanRows(..) => "mean pool",
            Op::PairBias { .. } => "topology bias",
            Op::Attention { .. } => "attention",
            Op::MaskedMse { .. } => "masked mse",
            Op::SoftmaxCe { .. } => "cross entropy",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.cols, tb.rows, "matmul shape");
        let mut out = Tensor::zeros(ta.rows, tb.cols);
        matmul_acc(&ta.data, &tb.data, &mut out.data, ta.rows, ta.cols, tb.cols);
        self.push(out, Op::MatMul(a.0, b.0))
    }

    /// Adds a `1 x m` row vector to every row.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(bias));
        assert_eq!((tb.rows, tb.cols), (1, ta.cols), "bias shape");
        let mut out = ta.clone();
        for r in 0..out.rows {
            for (x, b) in out.row_mut(r).iter_mut().zip(&tb.data) {
                *x += b;
            }
        }
        self.push(out, Op::AddBias(a.0, bias.0))
    }

    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let y = self.matmul(x, w);
        self.add_bias(y, b)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "add shape");
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
        let out = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(out, Op::Add(a.0, b.0))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let ta = self.value(a);
        let out = Tensor::from_vec(ta.rows, ta.cols, ta.data.iter().map(|x| x * s).collect());
        self.push(out, Op::Scale(a.0, s))
    }

    /// Multiplies row `r` by the constant `s[r]`.
    pub fn row_scale(&mut self, a: Var, s: Vec<f64>) -> Var {
        let ta = self.value(a);
        assert_eq!(s.len(), ta.rows, "row_scale length");
        let mut out = ta.clone();
        for (r, f) in s.iter().enumerate() {
            out.row_mut(r).iter_mut().for_each(|x| *x *= f);
        }
        self.push(out, Op::RowScale(a.0, s))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let out = Tensor::from_vec(ta.rows, ta.cols, ta.data.iter().map(|x| gelu(*x)).collect());
        self.push(out, Op::Gelu(a.0))
    }

    /// Row-wise layer normalization with `1 x C` gain and offset.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let (tx, tg, tb) = (self.value(x), self.value(gamma), self.value(beta));
        let c = tx.cols;
        let mut out = Tensor::zeros(tx.rows, c);
        let mut xhat = vec![0.0; tx.data.len()];
        let mut inv_std = vec![0.0; tx.rows];
        for r in 0..tx.rows {
            let row = tx.row(r);
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std[r] = is;
            for j in 0..c {
                let h = (row[j] - mean) * is;
                xhat[r * c + j] = h;
                out.data[r * c + j] = h * tg.data[j] + tb.data[j];
            }
        }
        self.push(
            out,
            Op::LayerNorm {
                x: x.0,
                gamma: gamma.0,
                beta: beta.0,
                xhat,
                inv_std,
            },
        )
    }

    /// Builds a matrix whose row `i` is row `index[i].1` of `sources[index[i].0]`.
    pub fn gather(&mut self, sources: &[Var], index: Vec<(usize, usize)>) -> Var {
        let cols = self.value(sources[0]).cols;
        assert!(sources.iter().all(|s| self.value(*s).cols == cols), "gather width");
        let mut out = Tensor::zeros(index.len(), cols);
        for (i, &(s, r)) in index.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.value(sources[s]).row(r));
        }
        self.push(
            out,
            Op::Gather {
                sources: sources.iter().map(|v| v.0).collect(),
                index,
            },
        )
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let mut out = Tensor::zeros(1, ta.cols);
        for r in 0..ta.rows {
            for (o, x) in out.data.iter_mut().zip(ta.row(r)) {
                *o += x;
            }
        }
        let n = ta.rows as f64;
        out.data.iter_mut().for_each(|x| *x /= n);
        self.push(out, Op::MeanRows(a.0))
    }

    /// `H x (n*n)` bias: entry `(h, a*n+b)` sums `proj[s, h]` over the listed
    /// `(a, b, s)` pairs, applied symmetrically.
    pub fn pair_bias(&mut self, proj: Var, pairs: Vec<(usize, usize, usize)>, n: usize) -> Var {
        let tp = self.value(proj);
        let heads = tp.cols;
        let mut out = Tensor::zeros(heads, n * n);
        for &(a, b, s) in &pairs {
            for h in 0..heads {
                let p = tp.get(s, h);
                out.data[h * n * n + a * n + b] += p;
                out.data[h * n * n + b * n + a] += p;
            }
        }
        self.push(out, Op::PairBias { proj: proj.0, pairs, n })
    }

    /// Multi-head scaled dot-product attention within blocks. `bias`, if
    /// given, is `H x (n*n)` for a single block of `n` tokens.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, bias: Option<Var>, layout: AttnLayout) -> Var {
        let (tq, tk, tv) = (self.value(q), self.value(k), self.value(v));
        let (t, c) = tq.shape();
        let h = layout.heads;
        assert!(c % h == 0, "width not divisible by heads");
        assert_eq!(layout.key_valid.len(), t, "key mask length");
        let dh = c / h;
        let sc = 1.0 / (dh as f64).sqrt();
        if bias.is_some() {
            assert!(layout.blocks.len() == 1, "bias needs a single block");
        }
        let tb = bias.map(|b| self.value(b));
        let mut out = Tensor::zeros(t, c);
        let mut probs = Vec::new();
        for &(start, len) in &layout.blocks {
            let keys: Vec<usize> = (start..start + len).filter(|j| layout.key_valid[*j]).collect();
            for hh in 0..h {
                let cols = hh * dh..(hh + 1) * dh;
                for i in start..start + len {
                    let qi = &tq.row(i)[cols.clone()];
                    let mut logits: Vec<f64> = keys
                        .iter()
                        .map(|&j| {
                            let kj = &tk.row(j)[cols.clone()];
                            let mut l = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * sc;
                            if let Some(b) = tb {
                                l += b.get(hh, (i - start) * len + (j - start));
                            }
                            l
                        })
                        .collect();
                    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut z = 0.0;
                    for l in logits.iter_mut() {
                        *l = (*l - mx).exp();
                        z += *l;
                    }
                    logits.iter_mut().for_each(|p| *p /= z);
                    let orow = &mut out.data[i * c..(i + 1) * c];
                    for (p, &j) in logits.iter().zip(&keys) {
                        for (o, x) in orow[cols.clone()].iter_mut().zip(&tv.row(j)[cols.clone()]) {
                            *o += p * x;
                        }
                    }
                    probs.push(logits);
                }
            }
        }
        self.push(
            out,
            Op::Attention {
                q: q.0,
                k: k.0,
                v: v.0,
                bias: bias.map(|b| b.0),
                layout,
                probs,
            },
        )
    }

    /// `sum_r weights[r] * sum_{slots valid} ||pred - target||^2` where a row
    /// holds `slots` points of 3 coordinates; returns a `1 x 1` scalar.
    pub fn masked_mse(&mut self, pred: Var, target: Vec<f64>, mask: Vec<u8>, weights: Vec<f64>) -> Var {
        let tp = self.value(pred);
        assert_eq!(tp.data.len(), target.len(), "target length");
        assert_eq!(tp.data.len(), mask.len() * 3, "mask length");
        assert_eq!(weights.len(), tp.rows, "weights length");
        let slots = tp.cols / 3;
        let mut total = 0.0;
        for r in 0..tp.rows {
            if weights[r] == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for s in 0..slots {
                if mask[r * slots + s] == 0 {
                    continue;
                }
                let o = r * tp.cols + 3 * s;
                for d in 0..3 {
                    let e = tp.data[o + d] - target[o + d];
                    acc += e * e;
                }
            }
            total += weights[r] * acc;
        }
        self.push(
            Tensor::from_vec(1, 1, vec![total]),
            Op::MaskedMse {
                pred: pred.0,
                target,
                mask,
                weights,
            },
        )
    }

    /// Mean softmax cross-entropy of `logits` rows against `labels`.
    pub fn softmax_ce(&mut self, logits: Var, labels: Vec<usize>) -> Var {
        let tl = self.value(logits);
        assert_eq!(tl.rows, labels.len(), "label count");
        let k = tl.cols;
        let mut probs = vec![0.0; tl.data.len()];
        let mut loss = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = tl.row(r);
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - mx).exp()).sum();
            for j in 0..k {
                probs[r * k + j] = (row[j] - mx).exp() / z;
            }
            loss += -(row[y] - mx - z.ln());
        }
        loss /= labels.len() as f64;
        self.push(Tensor::from_vec(1, 1, vec![loss]), Op::SoftmaxCe { logits: logits.0, labels, probs })
    }

    /// First node holding a non-finite value, with the name of its operation.
    pub fn first_non_finite(&self) -> Option<(Var, &'static str)> {
        self.nodes
            .iter()
            .position(|n| n.value.data.iter().any(|x| !x.is_finite()))
            .map(|i| (Var(i), self.nodes[i].op.name()))
    }

    /// Gradients of the scalar `root` with respect to every node.
    pub fn backward(&self, root: Var) -> Result<Vec<Option<Tensor>>> {
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor>> = (0..n).map(|_| None).collect();
        let rv = self.value(root);
        assert_eq!(rv.shape(), (1, 1), "backward needs a scalar");
        if !rv.data[0].is_finite() {
            return Err(Error::Numeric(format!("loss node {}", root.0)));
        }
        grads[root.0] = Some(Tensor::from_vec(1, 1, vec![1.0]));
        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if g.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("gradient of node {idx}")));
            }
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(grads)
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let shapes = |i: usize| self.nodes[i].value.shape();
        fn slot<'g>(grads: &'g mut [Option<Tensor>], i: usize, (r, c): (usize, usize)) -> &'g mut Tensor {
            grads[i].get_or_insert_with(|| Tensor::zeros(r, c))
        }
        macro_rules! acc {
            ($g:expr, $i:expr) => {
                slot($g, $i, shapes($i))
            };
        }
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                let ga = acc!(grads, *a);
                matmul_nt_acc(&g.data, &tb.data, &mut ga.data, ta.rows, tb.cols, tb.rows);
                let gb = acc!(grads, *b);
                matmul_tn_acc(&ta.data, &g.data, &mut gb.data, ta.rows, ta.cols, tb.cols);
            }
            Op::AddBias(a, b) => {
                let ga = acc!(grads, *a);
                ga.data.iter_mut().zip(&g.data).for_each(|(x, y)| *x += y);
                let gb = acc!(grads, *b);
                for r in 0..g.rows {
                    gb.data.iter_mut().zip(g.row(r)).for_each(|(x, y)| *x += y);
                }
            }
            Op::Add(a, b) => {
                for i in [*a, *b] {
                    acc!(grads, i).data.iter_mut().zip(&g.data).for_each(|(x, y)| *x += y);
                }
            }
            Op::Scale(a, s) => {
                acc!(grads, *a).data.iter_mut().zip(&g.data).for_each(|(x, y)| *x += s * y);
            }
            Op::RowScale(a, s) => {
                let ga = acc!(grads, *a);
                for (r, f) in s.iter().enumerate() {
                    ga.row_mut(r).iter_mut().zip(g.row(r)).for_each(|(x, y)| *x += f * y);
                }
            }
            Op::Gelu(a) => {
                let xs = &self.nodes[*a].value.data;
                let ga = acc!(grads, *a);
                for ((o, x), y) in ga.data.iter_mut().zip(xs).zip(&g.data) {
                    *o += gelu_grad(*x) * y;
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let c = g.cols;
                let gam = &self.nodes[*gamma].value.data;
                {
                    let gg = acc!(grads, *gamma);
                    for r in 0..g.rows {
                        for j in 0..c {
                            gg.data[j] += g.data[r * c + j] * xhat[r * c + j];
                        }
                    }
                }
                {
                    let gb = acc!(grads, *beta);
                    for r in 0..g.rows {
                        gb.data.iter_mut().zip(g.row(r)).for_each(|(a, b)| *a += b);
                    }
                }
                let gx = acc!(grads, *x);
                for r in 0..g.rows {
                    let dxhat: Vec<f64> = (0..c).map(|j| g.data[r * c + j] * gam[j]).collect();
                    let m1 = dxhat.iter().sum::<f64>() / c as f64;
                    let m2 = dxhat.iter().zip(&xhat[r * c..(r + 1) * c]).map(|(a, b)| a * b).sum::<f64>() / c as f64;
                    for j in 0..c {
                        gx.data[r * c + j] += inv_std[r] * (dxhat[j] - m1 - xhat[r * c + j] * m2);
                    }
                }
            }
            Op::Gather { sources, index } => {
                for (i, &(s, r)) in index.iter().enumerate() {
                    let gs = acc!(grads, sources[s]);
                    gs.row_mut(r).iter_mut().zip(g.row(i)).for_each(|(x, y)| *x += y);
                }
            }
            Op::MeanRows(a) => {
                let ga = acc!(grads, *a);
                let n = ga.rows as f64;
                for r in 0..ga.rows {
                    ga.row_mut(r).iter_mut().zip(&g.data).for_each(|(x, y)| *x += y / n);
                }
            }
            Op::PairBias { proj, pairs, n } => {
                let gp = acc!(grads, *proj);
                let heads = gp.cols;
                for &(a, b, s) in pairs {
                    for h in 0..heads {
                        gp.data[s * heads + h] += g.data[h * n * n + a * n + b] + g.data[h * n * n + b * n + a];
                    }
                }
            }
            Op::Attention {
                q,
                k,
                v,
                bias,
                layout,
                probs,
            } => {
                let (tq, tk, tv) = (&self.nodes[*q].value, &self.nodes[*k].value, &self.nodes[*v].value);
                let c = tq.cols;
                let h = layout.heads;
                let dh = c / h;
                let sc = 1.0 / (dh as f64).sqrt();
                let mut gq = Tensor::zeros(tq.rows, c);
                let mut gk = Tensor::zeros(tk.rows, c);
                let mut gv = Tensor::zeros(tv.rows, c);
                let mut gb = bias.map(|b| Tensor::zeros(self.nodes[b].value.rows, self.nodes[b].value.cols));
                let mut pi = 0;
                for &(start, len) in &layout.blocks {
                    let keys: Vec<usize> = (start..start + len).filter(|j| layout.key_valid[*j]).collect();
                    for hh in 0..h {
                        let cols = hh * dh..(hh + 1) * dh;
                        for i in start..start + len {
                            let p = &probs[pi];
                            pi += 1;
                            let go = &g.row(i)[cols.clone()];
                            let dp: Vec<f64> = keys
                                .iter()
                                .map(|&j| go.iter().zip(&tv.row(j)[cols.clone()]).map(|(a, b)| a * b).sum())
                                .collect();
                            let dot: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
                            for (kk, &j) in keys.iter().enumerate() {
                                for (x, y) in gv.row_mut(j)[cols.clone()].iter_mut().zip(go) {
                                    *x += p[kk] * y;
                                }
                                let dl = p[kk] * (dp[kk] - dot);
                                if dl == 0.0 {
                                    continue;
                                }
                                if let Some(gb) = gb.as_mut() {
                                    gb.data[hh * len * len + (i - start) * len + (j - start)] += dl;
                                }
                                let s = dl * sc;
                                let (qi, kj) = (&tq.row(i)[cols.clone()], &tk.row(j)[cols.clone()]);
                                for (x, y) in gq.row_mut(i)[cols.clone()].iter_mut().zip(kj) {
                                    *x += s * y;
                                }
                                for (x, y) in gk.row_mut(j)[cols.clone()].iter_mut().zip(qi) {
                                    *x += s * y;
                                }
                            }
                        }
                    }
                }
                for (i, t) in [(*q, gq), (*k, gk), (*v, gv)] {
                    acc!(grads, i).data.iter_mut().zip(&t.data).for_each(|(x, y)| *x += y);
                }
                if let (Some(b), Some(t)) = (bias, gb) {
                    acc!(grads, *b).data.iter_mut().zip(&t.data).for_each(|(x, y)| *x += y);
                }
            }
            Op::MaskedMse {
                pred,
                target,
                mask,
                weights,
            } => {
                let tp = &self.nodes[*pred].value;
                let cols = tp.cols;
                let slots = cols / 3;
                let s = g.data[0];
                let gp = acc!(grads, *pred);
                for r in 0..tp.rows {
                    if weights[r] == 0.0 {
                        continue;
                    }
                    for sl in 0..slots {
                        if mask[r * slots + sl] == 0 {
                            continue;
                        }
                        let o = r * cols + 3 * sl;
                        for d in 0..3 {
                            gp.data[o + d] += s * weights[r] * 2.0 * (tp.data[o + d] - target[o + d]);
                        }
                    }
                }
            }
            Op::SoftmaxCe { logits, labels, probs } => {
                let k = self.nodes[*logits].value.cols;
                let s = g.data[0] / labels.len() as f64;
                let gl = acc!(grads, *logits);
                for (r, &y) in labels.iter().enumerate() {
                    for j in 0..k {
                        let t = if j == y { 1.0 } else { 0.0 };
                        gl.data[r * k + j] += s * (probs[r * k + j] - t);
                    }
                }
            }
        }
    }
}
