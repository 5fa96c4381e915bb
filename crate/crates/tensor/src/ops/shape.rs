use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::{strides_of, Tensor};

pub(crate) fn permute_raw<T: Element>(data: &[T], shape: &[usize], axes: &[usize]) -> Vec<T> {
    let rank = shape.len();
    let in_strides = strides_of(shape);
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let out_strides = strides_of(&out_shape);
    let n: usize = shape.iter().product();
    let mut out = vec![T::zero(); n];
    for (lin, slot) in out.iter_mut().enumerate() {
        let mut rem = lin;
        let mut src = 0usize;
        for d in 0..rank {
            let idx = rem / out_strides[d];
            rem %= out_strides[d];
            src += idx * in_strides[axes[d]];
        }
        *slot = data[src];
    }
    out
}

impl<T: Element> Tensor<T> {
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<T>> {
        let numel: usize = shape.iter().product();
        if numel != self.numel() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: self.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        let data = self.to_vec();
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::Reshape { a: self.clone() });
        Tensor::from_op("reshape", shape.to_vec(), data, node)
    }

    /// General axis permutation, e.g. [0,2,1] swaps the last two axes of a
    /// rank-3 tensor.
    pub fn permute(&self, axes: &[usize]) -> Result<Tensor<T>> {
        if axes.len() != self.rank() {
            return Err(TensorError::InvalidArgument {
                op: "permute",
                msg: format!("axes {:?} do not match rank {}", axes, self.rank()),
            });
        }
        let mut seen = vec![false; axes.len()];
        for &a in axes {
            if a >= axes.len() || seen[a] {
                return Err(TensorError::InvalidArgument {
                    op: "permute",
                    msg: format!("axes {:?} are not a permutation", axes),
                });
            }
            seen[a] = true;
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape()[a]).collect();
        let data = self.with_data(|d| permute_raw(d, self.shape(), axes));
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::Permute {
            a: self.clone(),
            axes: axes.to_vec(),
        });
        Tensor::from_op("permute", out_shape, data, node)
    }

    /// Contiguous slice of `len` entries starting at `start` along `axis`.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Result<Tensor<T>> {
        if axis >= self.rank() {
            return Err(TensorError::InvalidArgument {
                op: "narrow",
                msg: format!("axis {} out of range for rank {}", axis, self.rank()),
            });
        }
        let mid = self.shape()[axis];
        if start + len > mid {
            return Err(TensorError::IndexOutOfBounds {
                op: "narrow",
                index: start + len,
                limit: mid,
            });
        }
        let outer: usize = self.shape()[..axis].iter().product();
        let inner: usize = self.shape()[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * len * inner);
        self.with_data(|d| {
            for o in 0..outer {
                let base = (o * mid + start) * inner;
                data.extend_from_slice(&d[base..base + len * inner]);
            }
        });
        let mut out_shape = self.shape().to_vec();
        out_shape[axis] = len;
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::Narrow {
            a: self.clone(),
            axis,
            start,
        });
        Tensor::from_op("narrow", out_shape, data, node)
    }

    /// Concatenation along `axis`; all other dims must agree.
    pub fn cat(parts: &[Tensor<T>], axis: usize) -> Result<Tensor<T>> {
        let first = parts.first().ok_or_else(|| TensorError::InvalidArgument {
            op: "cat",
            msg: "empty input list".into(),
        })?;
        if axis >= first.rank() {
            return Err(TensorError::InvalidArgument {
                op: "cat",
                msg: format!("axis {} out of range for rank {}", axis, first.rank()),
            });
        }
        let mut total_mid = 0usize;
        for p in parts {
            if p.rank() != first.rank() {
                return Err(TensorError::ShapeMismatch {
                    op: "cat",
                    lhs: first.shape().to_vec(),
                    rhs: p.shape().to_vec(),
                });
            }
            for d in 0..first.rank() {
                if d != axis && p.shape()[d] != first.shape()[d] {
                    return Err(TensorError::ShapeMismatch {
                        op: "cat",
                        lhs: first.shape().to_vec(),
                        rhs: p.shape().to_vec(),
                    });
                }
            }
            total_mid += p.shape()[axis];
        }
        let outer: usize = first.shape()[..axis].iter().product();
        let inner: usize = first.shape()[axis + 1..].iter().product();
        let mut out_shape = first.shape().to_vec();
        out_shape[axis] = total_mid;
        let mut data = vec![T::zero(); outer * total_mid * inner];
        let mut offset = 0usize;
        for p in parts {
            let len = p.shape()[axis];
            p.with_data(|pd| {
                for o in 0..outer {
                    let dst = (o * total_mid + offset) * inner;
                    let src = o * len * inner;
                    data[dst..dst + len * inner].copy_from_slice(&pd[src..src + len * inner]);
                }
            });
            offset += len;
        }
        let record = grad_enabled() && parts.iter().any(|p| p.requires_grad());
        let node = record.then(|| Op::Cat {
            parts: parts.to_vec(),
            axis,
        });
        Tensor::from_op("cat", out_shape, data, node)
    }

    /// Picks flat positions out of the tensor into a 1-D result. The adjoint
    /// scatter-adds, so repeated indices are fine.
    pub fn gather_flat(&self, idx: &[usize]) -> Result<Tensor<T>> {
        let n = self.numel();
        for &i in idx {
            if i >= n {
                return Err(TensorError::IndexOutOfBounds {
                    op: "gather_flat",
                    index: i,
                    limit: n,
                });
            }
        }
        let data = self.with_data(|d| idx.iter().map(|&i| d[i]).collect());
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::GatherFlat {
            a: self.clone(),
            idx: idx.to_vec(),
        });
        Tensor::from_op("gather_flat", vec![idx.len()], data, node)
    }

    /// Row lookup into an embedding table (V,d). `ids` are flattened token
    /// positions; the result has shape `prefix_shape + [d]`.
    pub fn embedding_lookup(
        weight: &Tensor<T>,
        ids: &[usize],
        prefix_shape: &[usize],
    ) -> Result<Tensor<T>> {
        if weight.rank() != 2 {
            return Err(TensorError::RankError {
                op: "embedding",
                expected: 2,
                shape: weight.shape().to_vec(),
            });
        }
        let n: usize = prefix_shape.iter().product();
        if n != ids.len() {
            return Err(TensorError::InvalidArgument {
                op: "embedding",
                msg: format!("{} ids do not fill shape {:?}", ids.len(), prefix_shape),
            });
        }
        let (v, d) = (weight.shape()[0], weight.shape()[1]);
        for &id in ids {
            if id >= v {
                return Err(TensorError::IndexOutOfBounds {
                    op: "embedding",
                    index: id,
                    limit: v,
                });
            }
        }
        let mut data = Vec::with_capacity(ids.len() * d);
        weight.with_data(|w| {
            for &id in ids {
                data.extend_from_slice(&w[id * d..(id + 1) * d]);
            }
        });
        let mut out_shape = prefix_shape.to_vec();
        out_shape.push(d);
        let record = grad_enabled() && weight.requires_grad();
        let node = record.then(|| Op::Embedding {
            weight: weight.clone(),
            ids: ids.to_vec(),
        });
        Tensor::from_op("embedding", out_shape, data, node)
    }
}
