use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::Tensor;

impl<T: Element> Tensor<T> {
    /// Mean cross-entropy from raw logits (n,C). Labels are class indices;
    /// negative entries are ignored (masked positions in sequence tasks).
    /// Errors if every label is ignored.
    pub fn softmax_cross_entropy(&self, labels: &[i64]) -> Result<Tensor<T>> {
        if self.rank() != 2 {
            return Err(TensorError::RankError {
                op: "softmax_cross_entropy",
                expected: 2,
                shape: self.shape().to_vec(),
            });
        }
        let (n, c) = (self.shape()[0], self.shape()[1]);
        if labels.len() != n {
            return Err(TensorError::InvalidArgument {
                op: "softmax_cross_entropy",
                msg: format!("{} labels for {} rows", labels.len(), n),
            });
        }
        let mut valid = vec![false; n];
        let mut idx = vec![0usize; n];
        let mut n_valid = 0usize;
        for (r, &l) in labels.iter().enumerate() {
            if l < 0 {
                continue;
            }
            let l = l as usize;
            if l >= c {
                return Err(TensorError::IndexOutOfBounds {
                    op: "softmax_cross_entropy",
                    index: l,
                    limit: c,
                });
            }
            valid[r] = true;
            idx[r] = l;
            n_valid += 1;
        }
        if n_valid == 0 {
            return Err(TensorError::InvalidArgument {
                op: "softmax_cross_entropy",
                msg: "all labels are ignored".into(),
            });
        }
        let (probs, total) = self.with_data(|xs| {
            let mut probs = Vec::with_capacity(xs.len());
            let mut total = T::zero();
            for r in 0..n {
                let row = &xs[r * c..(r + 1) * c];
                let mut mx = row[0];
                for &x in row {
                    if x > mx {
                        mx = x;
                    }
                }
                let mut denom = T::zero();
                let base = probs.len();
                for &x in row {
                    let e = (x - mx).exp();
                    probs.push(e);
                    denom += e;
                }
                for p in &mut probs[base..] {
                    *p /= denom;
                }
                if valid[r] {
                    let lse = mx + denom.ln();
                    total += lse - row[idx[r]];
                }
            }
            (probs, total)
        });
        let loss = total / T::from_f64(n_valid as f64);
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::SoftmaxXent {
            logits: self.clone(),
            probs,
            labels: idx,
            valid,
            n_valid,
        });
        Tensor::from_op("softmax_cross_entropy", vec![], vec![loss], node)
    }

    /// Mean binary cross-entropy from logits, computed in the softplus form
    /// max(x,0) - x*y + ln(1+exp(-|x|)) so large logits cannot overflow.
    pub fn bce_with_logits(&self, targets: &[T]) -> Result<Tensor<T>> {
        let n = self.numel();
        if targets.len() != n {
            return Err(TensorError::InvalidArgument {
                op: "bce_with_logits",
                msg: format!("{} targets for {} logits", targets.len(), n),
            });
        }
        if n == 0 {
            return Err(TensorError::InvalidArgument {
                op: "bce_with_logits",
                msg: "empty input".into(),
            });
        }
        for &y in targets {
            if y < T::zero() || y > T::one() {
                return Err(TensorError::InvalidArgument {
                    op: "bce_with_logits",
                    msg: "targets must lie in [0,1]".into(),
                });
            }
        }
        let total = self.with_data(|xs| {
            let mut acc = T::zero();
            for (&x, &y) in xs.iter().zip(targets) {
                let pos = if x > T::zero() { x } else { T::zero() };
                acc += pos - x * y + (-x.abs()).exp().ln_1p();
            }
            acc
        });
        let loss = total / T::from_f64(n as f64);
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::BceLogits {
            logits: self.clone(),
            targets: targets.to_vec(),
        });
        Tensor::from_op("bce_with_logits", vec![], vec![loss], node)
    }

    /// Mean squared error against a same-shaped target.
    pub fn mse_loss(&self, target: &Tensor<T>) -> Result<Tensor<T>> {
        if self.shape() != target.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "mse_loss",
                lhs: self.shape().to_vec(),
                rhs: target.shape().to_vec(),
            });
        }
        if self.numel() == 0 {
            return Err(TensorError::InvalidArgument {
                op: "mse_loss",
                msg: "empty input".into(),
            });
        }
        let total = self.with_data(|p| {
            target.with_data(|t| {
                let mut acc = T::zero();
                for (&pv, &tv) in p.iter().zip(t) {
                    let d = pv - tv;
                    acc += d * d;
                }
                acc
            })
        });
        let loss = total / T::from_f64(self.numel() as f64);
        let record = grad_enabled() && (self.requires_grad() || target.requires_grad());
        let node = record.then(|| Op::Mse {
            pred: self.clone(),
            target: target.clone(),
        });
        Tensor::from_op("mse_loss", vec![], vec![loss], node)
    }
}
