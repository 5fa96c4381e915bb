use std::cell::Cell;
use std::collections::{HashMap, HashSet};

use crate::error::{Result, TensorError};
use crate::ops::broadcast::{binary_map, reduce_to_shape};
use crate::ops::kernels::{conv2d_dk_raw, conv2d_dx_raw, matmul_raw, transpose_raw, ConvDims};
use crate::ops::shape::permute_raw;
use crate::scalar::Element;
use crate::tensor::{Tensor, TensorId};

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// RAII guard that disables graph recording on the current thread. Anything
/// computed while a guard lives is treated as a constant by backward.
pub struct NoGradGuard {
    prev: bool,
}

impl NoGradGuard {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        let prev = GRAD_ENABLED.with(|g| g.replace(false));
        Self { prev }
    }
}

impl Drop for NoGradGuard {
    fn drop(&mut self) {
        let prev = self.prev;
        GRAD_ENABLED.with(|g| g.set(prev));
    }
}

pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    let _guard = NoGradGuard::new();
    f()
}

/// Backward node: the op that produced a tensor, its inputs, and whatever the
/// forward pass saved for the reverse computation.
pub(crate) enum Op<T: Element> {
    Add { a: Tensor<T>, b: Tensor<T> },
    Sub { a: Tensor<T>, b: Tensor<T> },
    Mul { a: Tensor<T>, b: Tensor<T> },
    Div { a: Tensor<T>, b: Tensor<T> },
    Scale { a: Tensor<T>, c: T },
    AddScalar { a: Tensor<T> },
    Neg { a: Tensor<T> },
    Relu { a: Tensor<T> },
    Tanh { a: Tensor<T> },
    Sigmoid { a: Tensor<T> },
    Sqrt { a: Tensor<T> },
    Matmul { a: Tensor<T>, b: Tensor<T> },
    Bmm { a: Tensor<T>, b: Tensor<T> },
    Transpose2 { a: Tensor<T> },
    Permute { a: Tensor<T>, axes: Vec<usize> },
    Reshape { a: Tensor<T> },
    Narrow { a: Tensor<T>, axis: usize, start: usize },
    Cat { parts: Vec<Tensor<T>>, axis: usize },
    SumAll { a: Tensor<T> },
    SumLast { a: Tensor<T> },
    SumAxis1 { a: Tensor<T> },
    GlobalAvgPool { a: Tensor<T> },
    Embedding { weight: Tensor<T>, ids: Vec<usize> },
    GatherFlat { a: Tensor<T>, idx: Vec<usize> },
    Conv2d { x: Tensor<T>, k: Tensor<T>, stride: usize, padding: usize },
    BatchNorm {
        x: Tensor<T>,
        gamma: Tensor<T>,
        beta: Tensor<T>,
        xhat: Vec<T>,
        inv_std: Vec<T>,
        inner: usize,
        batch_stats: bool,
    },
    LayerNorm {
        x: Tensor<T>,
        gamma: Tensor<T>,
        beta: Tensor<T>,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    SoftmaxLast { a: Tensor<T> },
    SoftmaxXent {
        logits: Tensor<T>,
        probs: Vec<T>,
        labels: Vec<usize>,
        valid: Vec<bool>,
        n_valid: usize,
    },
    BceLogits { logits: Tensor<T>, targets: Vec<T> },
    Mse { pred: Tensor<T>, target: Tensor<T> },
}

impl<T: Element> Op<T> {
    pub(crate) fn inputs(&self) -> Vec<&Tensor<T>> {
        use Op::*;
        match self {
            Add { a, b } | Sub { a, b } | Mul { a, b } | Div { a, b } => vec![a, b],
            Scale { a, .. } | AddScalar { a } | Neg { a } | Relu { a } | Tanh { a }
            | Sigmoid { a } | Sqrt { a } | Transpose2 { a } | Reshape { a }
            | Narrow { a, .. } | SumAll { a } | SumLast { a } | SumAxis1 { a }
            | GlobalAvgPool { a } | GatherFlat { a, .. } | SoftmaxLast { a }
            | Permute { a, .. } => vec![a],
            Matmul { a, b } | Bmm { a, b } => vec![a, b],
            Cat { parts, .. } => parts.iter().collect(),
            Embedding { weight, .. } => vec![weight],
            Conv2d { x, k, .. } => vec![x, k],
            BatchNorm { x, gamma, beta, .. } | LayerNorm { x, gamma, beta, .. } => {
                vec![x, gamma, beta]
            }
            SoftmaxXent { logits, .. } | BceLogits { logits, .. } => vec![logits],
            Mse { pred, target } => vec![pred, target],
        }
    }

    fn backward(&self, out: &Tensor<T>, g: &[T], sink: &mut dyn FnMut(&Tensor<T>, Vec<T>)) {
        use Op::*;
        let out_shape = out.shape().to_vec();
        match self {
            Add { a, b } => {
                if a.requires_grad() {
                    sink(a, reduce_to_shape(g, &out_shape, a.shape()));
                }
                if b.requires_grad() {
                    sink(b, reduce_to_shape(g, &out_shape, b.shape()));
                }
            }
            Sub { a, b } => {
                if a.requires_grad() {
                    sink(a, reduce_to_shape(g, &out_shape, a.shape()));
                }
                if b.requires_grad() {
                    let neg: Vec<T> = g.iter().map(|&v| -v).collect();
                    sink(b, reduce_to_shape(&neg, &out_shape, b.shape()));
                }
            }
            Mul { a, b } => {
                if a.requires_grad() {
                    let full = b.with_data(|bd| {
                        binary_map(&out_shape, g, b.shape(), bd, &out_shape, |gv, bv| gv * bv)
                    });
                    sink(a, reduce_to_shape(&full, &out_shape, a.shape()));
                }
                if b.requires_grad() {
                    let full = a.with_data(|ad| {
                        binary_map(&out_shape, g, a.shape(), ad, &out_shape, |gv, av| gv * av)
                    });
                    sink(b, reduce_to_shape(&full, &out_shape, b.shape()));
                }
            }
            Div { a, b } => {
                if a.requires_grad() {
                    let full = b.with_data(|bd| {
                        binary_map(&out_shape, g, b.shape(), bd, &out_shape, |gv, bv| gv / bv)
                    });
                    sink(a, reduce_to_shape(&full, &out_shape, a.shape()));
                }
                if b.requires_grad() {
                    let ga = a.with_data(|ad| {
                        binary_map(&out_shape, g, a.shape(), ad, &out_shape, |gv, av| gv * av)
                    });
                    let full = b.with_data(|bd| {
                        binary_map(&out_shape, &ga, b.shape(), bd, &out_shape, |t, bv| {
                            -t / (bv * bv)
                        })
                    });
                    sink(b, reduce_to_shape(&full, &out_shape, b.shape()));
                }
            }
            Scale { a, c } => {
                let c = *c;
                sink(a, g.iter().map(|&v| v * c).collect());
            }
            AddScalar { a } => sink(a, g.to_vec()),
            Neg { a } => sink(a, g.iter().map(|&v| -v).collect()),
            Relu { a } => {
                let da = a.with_data(|ad| {
                    g.iter()
                        .zip(ad)
                        .map(|(&gv, &av)| if av > T::zero() { gv } else { T::zero() })
                        .collect()
                });
                sink(a, da);
            }
            Tanh { a } => {
                let da = out.with_data(|y| {
                    g.iter()
                        .zip(y)
                        .map(|(&gv, &yv)| gv * (T::one() - yv * yv))
                        .collect()
                });
                sink(a, da);
            }
            Sigmoid { a } => {
                let da = out.with_data(|y| {
                    g.iter()
                        .zip(y)
                        .map(|(&gv, &yv)| gv * yv * (T::one() - yv))
                        .collect()
                });
                sink(a, da);
            }
            Sqrt { a } => {
                let half = T::from_f64(0.5);
                let da = out.with_data(|y| {
                    g.iter().zip(y).map(|(&gv, &yv)| gv * half / yv).collect()
                });
                sink(a, da);
            }
            Matmul { a, b } => {
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                if a.requires_grad() {
                    let da = b.with_data(|bd| {
                        let bt = transpose_raw(bd, k, n);
                        matmul_raw(g, &bt, m, n, k)
                    });
                    sink(a, da);
                }
                if b.requires_grad() {
                    let db = a.with_data(|ad| {
                        let at = transpose_raw(ad, m, k);
                        matmul_raw(&at, g, k, m, n)
                    });
                    sink(b, db);
                }
            }
            Bmm { a, b } => {
                let (bt, m, k) = (a.shape()[0], a.shape()[1], a.shape()[2]);
                let n = b.shape()[2];
                if a.requires_grad() {
                    let da = b.with_data(|bd| {
                        let mut da = Vec::with_capacity(bt * m * k);
                        for i in 0..bt {
                            let gb = &g[i * m * n..(i + 1) * m * n];
                            let bb = &bd[i * k * n..(i + 1) * k * n];
                            let bbt = transpose_raw(bb, k, n);
                            da.extend(matmul_raw(gb, &bbt, m, n, k));
                        }
                        da
                    });
                    sink(a, da);
                }
                if b.requires_grad() {
                    let db = a.with_data(|ad| {
                        let mut db = Vec::with_capacity(bt * k * n);
                        for i in 0..bt {
                            let gb = &g[i * m * n..(i + 1) * m * n];
                            let ab = &ad[i * m * k..(i + 1) * m * k];
                            let abt = transpose_raw(ab, m, k);
                            db.extend(matmul_raw(&abt, gb, k, m, n));
                        }
                        db
                    });
                    sink(b, db);
                }
            }
            Transpose2 { a } => {
                let (r, c) = (out_shape[0], out_shape[1]);
                sink(a, transpose_raw(g, r, c));
            }
            Permute { a, axes } => {
                let mut inverse = vec![0usize; axes.len()];
                for (i, &ax) in axes.iter().enumerate() {
                    inverse[ax] = i;
                }
                sink(a, permute_raw(g, &out_shape, &inverse));
            }
            Reshape { a } => sink(a, g.to_vec()),
            Narrow { a, axis, start } => {
                let a_shape = a.shape();
                let outer: usize = a_shape[..*axis].iter().product();
                let inner: usize = a_shape[*axis + 1..].iter().product();
                let mid = a_shape[*axis];
                let len = out_shape[*axis];
                let mut da = vec![T::zero(); a.numel()];
                for o in 0..outer {
                    for j in 0..len {
                        let src = (o * len + j) * inner;
                        let dst = (o * mid + start + j) * inner;
                        da[dst..dst + inner].copy_from_slice(&g[src..src + inner]);
                    }
                }
                sink(a, da);
            }
            Cat { parts, axis } => {
                let outer: usize = out_shape[..*axis].iter().product();
                let inner: usize = out_shape[*axis + 1..].iter().product();
                let total_mid = out_shape[*axis];
                let mut offset = 0usize;
                for part in parts {
                    let len = part.shape()[*axis];
                    if part.requires_grad() {
                        let mut dp = vec![T::zero(); part.numel()];
                        for o in 0..outer {
                            for j in 0..len {
                                let src = (o * total_mid + offset + j) * inner;
                                let dst = (o * len + j) * inner;
                                dp[dst..dst + inner].copy_from_slice(&g[src..src + inner]);
                            }
                        }
                        sink(part, dp);
                    }
                    offset += len;
                }
            }
            SumAll { a } => {
                let gv = g[0];
                sink(a, vec![gv; a.numel()]);
            }
            SumLast { a } => {
                let d = *a.shape().last().expect("sum_last input has rank >= 1");
                let da = (0..a.numel()).map(|i| g[i / d]).collect();
                sink(a, da);
            }
            SumAxis1 { a } => {
                let (b, t, d) = (a.shape()[0], a.shape()[1], a.shape()[2]);
                let mut da = Vec::with_capacity(b * t * d);
                for bi in 0..b {
                    for _ in 0..t {
                        da.extend_from_slice(&g[bi * d..(bi + 1) * d]);
                    }
                }
                sink(a, da);
            }
            GlobalAvgPool { a } => {
                let hw = a.shape()[2] * a.shape()[3];
                let scale = T::one() / T::from_f64(hw as f64);
                let da = (0..a.numel()).map(|i| g[i / hw] * scale).collect();
                sink(a, da);
            }
            Embedding { weight, ids } => {
                let d = weight.shape()[1];
                let mut dw = vec![T::zero(); weight.numel()];
                for (pos, &id) in ids.iter().enumerate() {
                    let src = &g[pos * d..(pos + 1) * d];
                    let dst = &mut dw[id * d..(id + 1) * d];
                    for (o, &x) in dst.iter_mut().zip(src) {
                        *o += x;
                    }
                }
                sink(weight, dw);
            }
            GatherFlat { a, idx } => {
                let mut da = vec![T::zero(); a.numel()];
                for (j, &i) in idx.iter().enumerate() {
                    da[i] += g[j];
                }
                sink(a, da);
            }
            Conv2d { x, k, stride, padding } => {
                let d = ConvDims {
                    b: x.shape()[0],
                    c_in: x.shape()[1],
                    h: x.shape()[2],
                    w: x.shape()[3],
                    c_out: k.shape()[0],
                    kh: k.shape()[2],
                    kw: k.shape()[3],
                    oh: out_shape[2],
                    ow: out_shape[3],
                    stride: *stride,
                    pad: *padding,
                };
                if x.requires_grad() {
                    let dx = k.with_data(|kd| conv2d_dx_raw(g, kd, &d));
                    sink(x, dx);
                }
                if k.requires_grad() {
                    let dk = x.with_data(|xd| conv2d_dk_raw(g, xd, &d));
                    sink(k, dk);
                }
            }
            BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                inner,
                batch_stats,
            } => {
                let nf = inv_std.len();
                let n = x.numel();
                let m = n / nf;
                let feat = |lin: usize| (lin / inner) % nf;
                let mut sum_g = vec![T::zero(); nf];
                let mut sum_gx = vec![T::zero(); nf];
                for (lin, &gv) in g.iter().enumerate() {
                    let f = feat(lin);
                    sum_g[f] += gv;
                    sum_gx[f] += gv * xhat[lin];
                }
                if gamma.requires_grad() {
                    sink(gamma, sum_gx.clone());
                }
                if beta.requires_grad() {
                    sink(beta, sum_g.clone());
                }
                if x.requires_grad() {
                    let gd = gamma.to_vec();
                    let minv = T::one() / T::from_f64(m as f64);
                    let dx: Vec<T> = if *batch_stats {
                        g.iter()
                            .enumerate()
                            .map(|(lin, &gv)| {
                                let f = feat(lin);
                                gd[f] * inv_std[f]
                                    * (gv - (sum_g[f] + xhat[lin] * sum_gx[f]) * minv)
                            })
                            .collect()
                    } else {
                        g.iter()
                            .enumerate()
                            .map(|(lin, &gv)| {
                                let f = feat(lin);
                                gv * gd[f] * inv_std[f]
                            })
                            .collect()
                    };
                    sink(x, dx);
                }
            }
            LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let d = *x.shape().last().expect("layer_norm input has rank >= 1");
                let rows = x.numel() / d;
                let gd = gamma.to_vec();
                let mut dgamma = vec![T::zero(); d];
                let mut dbeta = vec![T::zero(); d];
                let mut dx = vec![T::zero(); x.numel()];
                let dinv = T::one() / T::from_f64(d as f64);
                for r in 0..rows {
                    let base = r * d;
                    let mut sum_dxh = T::zero();
                    let mut sum_dxh_xh = T::zero();
                    for j in 0..d {
                        let gv = g[base + j];
                        dgamma[j] += gv * xhat[base + j];
                        dbeta[j] += gv;
                        let dxh = gv * gd[j];
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * xhat[base + j];
                    }
                    for j in 0..d {
                        let dxh = g[base + j] * gd[j];
                        dx[base + j] = inv_std[r]
                            * (dxh - (sum_dxh + xhat[base + j] * sum_dxh_xh) * dinv);
                    }
                }
                if gamma.requires_grad() {
                    sink(gamma, dgamma);
                }
                if beta.requires_grad() {
                    sink(beta, dbeta);
                }
                if x.requires_grad() {
                    sink(x, dx);
                }
            }
            SoftmaxLast { a } => {
                let d = *out_shape.last().expect("softmax input has rank >= 1");
                let da = out.with_data(|y| {
                    let mut da = vec![T::zero(); y.len()];
                    for r in 0..y.len() / d {
                        let base = r * d;
                        let mut dot = T::zero();
                        for j in 0..d {
                            dot += g[base + j] * y[base + j];
                        }
                        for j in 0..d {
                            da[base + j] = (g[base + j] - dot) * y[base + j];
                        }
                    }
                    da
                });
                sink(a, da);
            }
            SoftmaxXent {
                logits,
                probs,
                labels,
                valid,
                n_valid,
            } => {
                let c = logits.shape()[1];
                let gs = g[0];
                let scale = gs / T::from_f64(*n_valid as f64);
                let mut dl = vec![T::zero(); logits.numel()];
                for (r, &ok) in valid.iter().enumerate() {
                    if !ok {
                        continue;
                    }
                    let base = r * c;
                    for j in 0..c {
                        let onehot = if j == labels[r] { T::one() } else { T::zero() };
                        dl[base + j] = (probs[base + j] - onehot) * scale;
                    }
                }
                sink(logits, dl);
            }
            BceLogits { logits, targets } => {
                let gs = g[0];
                let scale = gs / T::from_f64(targets.len() as f64);
                let dl = logits.with_data(|xs| {
                    xs.iter()
                        .zip(targets)
                        .map(|(&x, &y)| (stable_sigmoid(x) - y) * scale)
                        .collect()
                });
                sink(logits, dl);
            }
            Mse { pred, target } => {
                let gs = g[0];
                let scale = gs * T::from_f64(2.0 / pred.numel() as f64);
                let diff: Vec<T> = pred.with_data(|p| {
                    target.with_data(|t| p.iter().zip(t).map(|(&pv, &tv)| pv - tv).collect())
                });
                if pred.requires_grad() {
                    sink(pred, diff.iter().map(|&v| v * scale).collect());
                }
                if target.requires_grad() {
                    sink(target, diff.iter().map(|&v| -v * scale).collect());
                }
            }
        }
    }
}

pub(crate) fn stable_sigmoid<T: Element>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// The reverse-pass schedule: every tensor reachable from a loss, in
/// topological order (inputs strictly before the tensors computed from them).
#[derive(Debug)]
pub struct GradTape<T: Element> {
    nodes: Vec<Tensor<T>>,
}

impl<T: Element> GradTape<T> {
    pub fn record(root: &Tensor<T>) -> Self {
        enum Frame<E: Element> {
            Enter(Tensor<E>),
            Exit(Tensor<E>),
        }
        let mut visited: HashSet<TensorId> = HashSet::new();
        let mut nodes = Vec::new();
        let mut stack = vec![Frame::Enter(root.clone())];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(t) => {
                    if visited.insert(t.id()) {
                        stack.push(Frame::Exit(t.clone()));
                        if let Some(op) = t.op() {
                            for input in op.inputs() {
                                if !visited.contains(&input.id()) {
                                    stack.push(Frame::Enter(input.clone()));
                                }
                            }
                        }
                    }
                }
                Frame::Exit(t) => nodes.push(t),
            }
        }
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Tensor<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl<T: Element> Tensor<T> {
    /// Reverse-mode sweep from a scalar loss. Gradients are added into the
    /// `grad` buffers of every trainable leaf on the tape; call `zero_grad`
    /// first if accumulation across calls is not wanted.
    pub fn backward(&self) -> Result<GradTape<T>> {
        if self.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: self.shape().to_vec(),
            });
        }
        if self.is_leaf() && !self.requires_grad() {
            return Err(TensorError::NoTape);
        }
        let tape = GradTape::record(self);
        let mut adjoints: HashMap<TensorId, Vec<T>> = HashMap::new();
        adjoints.insert(self.id(), vec![T::one()]);
        for node in tape.nodes().iter().rev() {
            let Some(g) = adjoints.remove(&node.id()) else {
                continue;
            };
            if node.is_leaf() {
                if node.requires_grad() {
                    node.accumulate_grad(&g);
                }
                continue;
            }
            let op = node.op().expect("non-leaf has an op");
            op.backward(node, &g, &mut |input: &Tensor<T>, delta: Vec<T>| {
                if !input.requires_grad() {
                    return;
                }
                adjoints
                    .entry(input.id())
                    .and_modify(|buf| {
                        for (b, &x) in buf.iter_mut().zip(&delta) {
                            *b += x;
                        }
                    })
                    .or_insert(delta);
            });
        }
        Ok(tape)
    }
}
