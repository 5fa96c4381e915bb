use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::Tensor;

impl<T: Element> Tensor<T> {
    /// Softmax along the last axis, stabilized with a per-row max shift.
    /// Additive masks (large negative logits) go in before this call.
    pub fn softmax_last(&self) -> Result<Tensor<T>> {
        if self.rank() == 0 {
            return Err(TensorError::RankError {
                op: "softmax",
                expected: 1,
                shape: vec![],
            });
        }
        let d = *self.shape().last().unwrap();
        let rows = self.numel() / d;
        let data = self.with_data(|xs| {
            let mut out = Vec::with_capacity(xs.len());
            for r in 0..rows {
                let row = &xs[r * d..(r + 1) * d];
                let mut mx = row[0];
                for &x in row {
                    if x > mx {
                        mx = x;
                    }
                }
                let mut denom = T::zero();
                let base = out.len();
                for &x in row {
                    let e = (x - mx).exp();
                    out.push(e);
                    denom += e;
                }
                for slot in &mut out[base..] {
                    *slot /= denom;
                }
            }
            out
        });
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::SoftmaxLast { a: self.clone() });
        Tensor::from_op("softmax", self.shape().to_vec(), data, node)
    }
}
