use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::Tensor;

impl<T: Element> Tensor<T> {
    /// Full reduction to a rank-0 scalar.
    pub fn sum_all(&self) -> Result<Tensor<T>> {
        let total = self.with_data(|d| {
            let mut acc = T::zero();
            for &x in d {
                acc += x;
            }
            acc
        });
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::SumAll { a: self.clone() });
        Tensor::from_op("sum_all", vec![], vec![total], node)
    }

    pub fn mean_all(&self) -> Result<Tensor<T>> {
        let n = self.numel();
        if n == 0 {
            return Err(TensorError::InvalidArgument {
                op: "mean_all",
                msg: "empty tensor".into(),
            });
        }
        self.sum_all()?.scale(T::one() / T::from_f64(n as f64))
    }

    /// Sum over the last axis, keeping it as size 1.
    pub fn sum_last(&self) -> Result<Tensor<T>> {
        if self.rank() == 0 {
            return Err(TensorError::RankError {
                op: "sum_last",
                expected: 1,
                shape: vec![],
            });
        }
        let d = *self.shape().last().unwrap();
        let rows = self.numel() / d;
        let data = self.with_data(|xs| {
            let mut out = Vec::with_capacity(rows);
            for r in 0..rows {
                let mut acc = T::zero();
                for &x in &xs[r * d..(r + 1) * d] {
                    acc += x;
                }
                out.push(acc);
            }
            out
        });
        let mut out_shape = self.shape().to_vec();
        *out_shape.last_mut().unwrap() = 1;
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::SumLast { a: self.clone() });
        Tensor::from_op("sum_last", out_shape, data, node)
    }

    /// (b,t,d) -> (b,d), summing over the middle axis.
    pub fn sum_axis1(&self) -> Result<Tensor<T>> {
        if self.rank() != 3 {
            return Err(TensorError::RankError {
                op: "sum_axis1",
                expected: 3,
                shape: self.shape().to_vec(),
            });
        }
        let (b, t, d) = (self.shape()[0], self.shape()[1], self.shape()[2]);
        let data = self.with_data(|xs| {
            let mut out = vec![T::zero(); b * d];
            for bi in 0..b {
                for ti in 0..t {
                    let base = (bi * t + ti) * d;
                    let o = &mut out[bi * d..(bi + 1) * d];
                    for (slot, &x) in o.iter_mut().zip(&xs[base..base + d]) {
                        *slot += x;
                    }
                }
            }
            out
        });
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::SumAxis1 { a: self.clone() });
        Tensor::from_op("sum_axis1", vec![b, d], data, node)
    }

    /// (b,c,h,w) -> (b,c) spatial mean.
    pub fn global_avg_pool(&self) -> Result<Tensor<T>> {
        if self.rank() != 4 {
            return Err(TensorError::RankError {
                op: "global_avg_pool",
                expected: 4,
                shape: self.shape().to_vec(),
            });
        }
        let (b, c, h, w) = (
            self.shape()[0],
            self.shape()[1],
            self.shape()[2],
            self.shape()[3],
        );
        let hw = h * w;
        let inv = T::one() / T::from_f64(hw as f64);
        let data = self.with_data(|xs| {
            let mut out = Vec::with_capacity(b * c);
            for bc in 0..b * c {
                let mut acc = T::zero();
                for &x in &xs[bc * hw..(bc + 1) * hw] {
                    acc += x;
                }
                out.push(acc * inv);
            }
            out
        });
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::GlobalAvgPool { a: self.clone() });
        Tensor::from_op("global_avg_pool", vec![b, c], data, node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_all_grad_is_ones() {
        let x = Tensor::<f64>::param(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = x.sum_all().unwrap();
        assert_eq!(s.item().unwrap(), 10.0);
        s.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn sum_last_keeps_axis() {
        let x = Tensor::<f64>::new(&[2, 3], (1..=6).map(|v| v as f64).collect()).unwrap();
        let s = x.sum_last().unwrap();
        assert_eq!(s.shape(), &[2, 1]);
        assert_eq!(s.to_vec(), vec![6.0, 15.0]);
    }

    #[test]
    fn sum_axis1_collapses_time() {
        let x = Tensor::<f64>::new(&[1, 2, 3], (1..=6).map(|v| v as f64).collect()).unwrap();
        let s = x.sum_axis1().unwrap();
        assert_eq!(s.shape(), &[1, 3]);
        assert_eq!(s.to_vec(), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn global_avg_pool_means_spatial() {
        let x = Tensor::<f64>::new(&[1, 2, 2, 2], (1..=8).map(|v| v as f64).collect()).unwrap();
        let p = x.global_avg_pool().unwrap();
        assert_eq!(p.to_vec(), vec![2.5, 6.5]);
        let xp = Tensor::<f64>::param(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        xp.global_avg_pool().unwrap().sum_all().unwrap().backward().unwrap();
        assert_eq!(xp.grad().unwrap(), vec![0.25; 4]);
    }
}
