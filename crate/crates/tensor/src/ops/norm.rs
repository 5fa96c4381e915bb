use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::Tensor;

/// How batch norm sources its statistics.
///
/// `Train` uses batch statistics and folds them into the running buffers.
/// `Eval` normalizes with the running buffers. `FrozenBatch` uses batch
/// statistics but leaves the buffers untouched (for frozen networks that were
/// never trained, whose running buffers are still at their init values).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NormMode {
    Train,
    Eval,
    FrozenBatch,
}

impl<T: Element> Tensor<T> {
    /// Per-feature normalization over the batch (and spatial axes for rank-4
    /// input). Feature axis is axis 1. Variance is biased (divide by m), both
    /// for normalization and for the running buffers.
    #[allow(clippy::too_many_arguments)]
    pub fn batch_norm(
        &self,
        gamma: &Tensor<T>,
        beta: &Tensor<T>,
        running_mean: &Tensor<T>,
        running_var: &Tensor<T>,
        mode: NormMode,
        momentum: f64,
        eps: f64,
    ) -> Result<Tensor<T>> {
        if self.rank() != 2 && self.rank() != 4 {
            return Err(TensorError::RankError {
                op: "batch_norm",
                expected: 2,
                shape: self.shape().to_vec(),
            });
        }
        let nf = self.shape()[1];
        for (name, t) in [
            ("gamma", gamma),
            ("beta", beta),
            ("running_mean", running_mean),
            ("running_var", running_var),
        ] {
            if t.shape() != [nf] {
                return Err(TensorError::InvalidArgument {
                    op: "batch_norm",
                    msg: format!("{name} must have shape [{nf}], got {:?}", t.shape()),
                });
            }
        }
        let inner: usize = self.shape()[2..].iter().product();
        let n = self.numel();
        let m = n / nf;
        let use_batch = mode != NormMode::Eval;
        if use_batch && m < 2 {
            return Err(TensorError::DegenerateBatch {
                op: "batch_norm",
                min: 2,
                got: m,
            });
        }
        let epst = T::from_f64(eps);
        let (mean, var): (Vec<T>, Vec<T>) = if use_batch {
            self.with_data(|xs| {
                let minv = T::one() / T::from_f64(m as f64);
                let mut mean = vec![T::zero(); nf];
                for (lin, &x) in xs.iter().enumerate() {
                    mean[(lin / inner) % nf] += x;
                }
                for v in mean.iter_mut() {
                    *v *= minv;
                }
                let mut var = vec![T::zero(); nf];
                for (lin, &x) in xs.iter().enumerate() {
                    let f = (lin / inner) % nf;
                    let d = x - mean[f];
                    var[f] += d * d;
                }
                for v in var.iter_mut() {
                    *v *= minv;
                }
                (mean, var)
            })
        } else {
            (running_mean.to_vec(), running_var.to_vec())
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + epst).sqrt()).collect();
        let (xhat, out) = self.with_data(|xs| {
            let g = gamma.to_vec();
            let b = beta.to_vec();
            let mut xhat = Vec::with_capacity(n);
            let mut out = Vec::with_capacity(n);
            for (lin, &x) in xs.iter().enumerate() {
                let f = (lin / inner) % nf;
                let xh = (x - mean[f]) * inv_std[f];
                xhat.push(xh);
                out.push(g[f] * xh + b[f]);
            }
            (xhat, out)
        });
        if mode == NormMode::Train {
            let mom = T::from_f64(momentum);
            let keep = T::one() - mom;
            let rm: Vec<T> = running_mean
                .to_vec()
                .iter()
                .zip(&mean)
                .map(|(&r, &b)| keep * r + mom * b)
                .collect();
            let rv: Vec<T> = running_var
                .to_vec()
                .iter()
                .zip(&var)
                .map(|(&r, &b)| keep * r + mom * b)
                .collect();
            running_mean.set_data(rm)?;
            running_var.set_data(rv)?;
        }
        let record = grad_enabled()
            && (self.requires_grad() || gamma.requires_grad() || beta.requires_grad());
        let node = record.then(|| Op::BatchNorm {
            x: self.clone(),
            gamma: gamma.clone(),
            beta: beta.clone(),
            xhat,
            inv_std,
            inner,
            batch_stats: use_batch,
        });
        Tensor::from_op("batch_norm", self.shape().to_vec(), out, node)
    }

    /// Normalization over the last axis, one mean/variance pair per row.
    pub fn layer_norm(&self, gamma: &Tensor<T>, beta: &Tensor<T>, eps: f64) -> Result<Tensor<T>> {
        if self.rank() == 0 {
            return Err(TensorError::RankError {
                op: "layer_norm",
                expected: 1,
                shape: vec![],
            });
        }
        let d = *self.shape().last().unwrap();
        if d < 2 {
            return Err(TensorError::InvalidArgument {
                op: "layer_norm",
                msg: format!("normalized axis must have at least 2 entries, got {d}"),
            });
        }
        for (name, t) in [("gamma", gamma), ("beta", beta)] {
            if t.shape() != [d] {
                return Err(TensorError::InvalidArgument {
                    op: "layer_norm",
                    msg: format!("{name} must have shape [{d}], got {:?}", t.shape()),
                });
            }
        }
        let rows = self.numel() / d;
        let epst = T::from_f64(eps);
        let dinv = T::one() / T::from_f64(d as f64);
        let (xhat, inv_std, out) = self.with_data(|xs| {
            let g = gamma.to_vec();
            let b = beta.to_vec();
            let mut xhat = Vec::with_capacity(xs.len());
            let mut inv_std = Vec::with_capacity(rows);
            let mut out = Vec::with_capacity(xs.len());
            for r in 0..rows {
                let row = &xs[r * d..(r + 1) * d];
                let mut mean = T::zero();
                for &x in row {
                    mean += x;
                }
                mean *= dinv;
                let mut var = T::zero();
                for &x in row {
                    let diff = x - mean;
                    var += diff * diff;
                }
                var *= dinv;
                let inv = T::one() / (var + epst).sqrt();
                inv_std.push(inv);
                for (j, &x) in row.iter().enumerate() {
                    let xh = (x - mean) * inv;
                    xhat.push(xh);
                    out.push(g[j] * xh + b[j]);
                }
            }
            (xhat, inv_std, out)
        });
        let record = grad_enabled()
            && (self.requires_grad() || gamma.requires_grad() || beta.requires_grad());
        let node = record.then(|| Op::LayerNorm {
            x: self.clone(),
            gamma: gamma.clone(),
            beta: beta.clone(),
            xhat,
            inv_std,
        });
        Tensor::from_op("layer_norm", self.shape().to_vec(), out, node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn batch_norm_standardizes_features() {
        let x = Tensor::<f64>::new(&[4, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let gamma = Tensor::<f64>::ones(&[1]);
        let beta = Tensor::<f64>::zeros(&[1]);
        let rm = Tensor::<f64>::zeros(&[1]);
        let rv = Tensor::<f64>::ones(&[1]);
        let y = x
            .batch_norm(&gamma, &beta, &rm, &rv, NormMode::Train, 0.1, 1e-5)
            .unwrap();
        let out = y.to_vec();
        let mean: f64 = out.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        // running buffers moved towards batch stats
        close(&rm.to_vec(), &[0.25], 1e-12);
        close(&rv.to_vec(), &[0.9 + 0.1 * 1.25], 1e-12);
    }

    #[test]
    fn frozen_batch_leaves_buffers() {
        let x = Tensor::<f64>::new(&[4, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let gamma = Tensor::<f64>::ones(&[1]);
        let beta = Tensor::<f64>::zeros(&[1]);
        let rm = Tensor::<f64>::zeros(&[1]);
        let rv = Tensor::<f64>::ones(&[1]);
        let y_frozen = x
            .batch_norm(&gamma, &beta, &rm, &rv, NormMode::FrozenBatch, 0.1, 1e-5)
            .unwrap();
        assert_eq!(rm.to_vec(), vec![0.0]);
        assert_eq!(rv.to_vec(), vec![1.0]);
        let y_train = x
            .batch_norm(&gamma, &beta, &rm, &rv, NormMode::Train, 0.1, 1e-5)
            .unwrap();
        close(&y_frozen.to_vec(), &y_train.to_vec(), 1e-12);
    }

    #[test]
    fn eval_uses_running_buffers() {
        let x = Tensor::<f64>::new(&[2, 1], vec![3.0, 5.0]).unwrap();
        let gamma = Tensor::<f64>::ones(&[1]);
        let beta = Tensor::<f64>::zeros(&[1]);
        let rm = Tensor::<f64>::new(&[1], vec![4.0]).unwrap();
        let rv = Tensor::<f64>::new(&[1], vec![4.0]).unwrap();
        let y = x
            .batch_norm(&gamma, &beta, &rm, &rv, NormMode::Eval, 0.1, 0.0)
            .unwrap();
        close(&y.to_vec(), &[-0.5, 0.5], 1e-12);
    }

    #[test]
    fn batch_of_one_rejected_in_train() {
        let x = Tensor::<f64>::new(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let gamma = Tensor::<f64>::ones(&[3]);
        let beta = Tensor::<f64>::zeros(&[3]);
        let rm = Tensor::<f64>::zeros(&[3]);
        let rv = Tensor::<f64>::ones(&[3]);
        let err = x
            .batch_norm(&gamma, &beta, &rm, &rv, NormMode::Train, 0.1, 1e-5)
            .unwrap_err();
        assert!(matches!(err, TensorError::DegenerateBatch { .. }));
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = Tensor::<f64>::new(&[2, 4], vec![1.0, 2.0, 3.0, 4.0, 10.0, 20.0, 30.0, 40.0])
            .unwrap();
        let gamma = Tensor::<f64>::ones(&[4]);
        let beta = Tensor::<f64>::zeros(&[4]);
        let y = x.layer_norm(&gamma, &beta, 1e-5).unwrap();
        let out = y.to_vec();
        for r in 0..2 {
            let row = &out[r * 4..(r + 1) * 4];
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }
}
