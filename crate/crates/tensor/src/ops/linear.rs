use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::ops::kernels::{matmul_raw, transpose_raw};
use crate::scalar::Element;
use crate::tensor::Tensor;

impl<T: Element> Tensor<T> {
    /// (m,k) x (k,n) -> (m,n)
    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(TensorError::RankError {
                op: "matmul",
                expected: 2,
                shape: if self.rank() != 2 {
                    self.shape().to_vec()
                } else {
                    other.shape().to_vec()
                },
            });
        }
        let (m, k) = (self.shape()[0], self.shape()[1]);
        let (k2, n) = (other.shape()[0], other.shape()[1]);
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape().to_vec(),
                rhs: other.shape().to_vec(),
            });
        }
        let data = self.with_data(|a| other.with_data(|b| matmul_raw(a, b, m, k, n)));
        let record = grad_enabled() && (self.requires_grad() || other.requires_grad());
        let node = record.then(|| Op::Matmul {
            a: self.clone(),
            b: other.clone(),
        });
        Tensor::from_op("matmul", vec![m, n], data, node)
    }

    /// Batched matmul: (B,m,k) x (B,k,n) -> (B,m,n)
    pub fn bmm(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        if self.rank() != 3 || other.rank() != 3 {
            return Err(TensorError::RankError {
                op: "bmm",
                expected: 3,
                shape: if self.rank() != 3 {
                    self.shape().to_vec()
                } else {
                    other.shape().to_vec()
                },
            });
        }
        let (bt, m, k) = (self.shape()[0], self.shape()[1], self.shape()[2]);
        let (bt2, k2, n) = (other.shape()[0], other.shape()[1], other.shape()[2]);
        if bt != bt2 || k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "bmm",
                lhs: self.shape().to_vec(),
                rhs: other.shape().to_vec(),
            });
        }
        let data = self.with_data(|a| {
            other.with_data(|b| {
                let mut out = Vec::with_capacity(bt * m * n);
                for i in 0..bt {
                    out.extend(matmul_raw(
                        &a[i * m * k..(i + 1) * m * k],
                        &b[i * k * n..(i + 1) * k * n],
                        m,
                        k,
                        n,
                    ));
                }
                out
            })
        });
        let record = grad_enabled() && (self.requires_grad() || other.requires_grad());
        let node = record.then(|| Op::Bmm {
            a: self.clone(),
            b: other.clone(),
        });
        Tensor::from_op("bmm", vec![bt, m, n], data, node)
    }

    /// Rank-2 transpose (materializes the data).
    pub fn transpose(&self) -> Result<Tensor<T>> {
        if self.rank() != 2 {
            return Err(TensorError::RankError {
                op: "transpose",
                expected: 2,
                shape: self.shape().to_vec(),
            });
        }
        let (r, c) = (self.shape()[0], self.shape()[1]);
        let data = self.with_data(|d| transpose_raw(d, r, c));
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::Transpose2 { a: self.clone() });
        Tensor::from_op("transpose", vec![c, r], data, node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_grads() {
        // loss = sum(A x B); dA = 1 x B^T, dB = A^T x 1
        let a = Tensor::<f64>::param(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::<f64>::param(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let loss = a.matmul(&b).unwrap().sum_all().unwrap();
        loss.backward().unwrap();
        assert_eq!(a.grad().unwrap(), vec![11.0, 15.0, 11.0, 15.0]);
        assert_eq!(b.grad().unwrap(), vec![4.0, 4.0, 6.0, 6.0]);
    }

    #[test]
    fn inner_dim_mismatch() {
        let a = Tensor::<f64>::zeros(&[2, 3]);
        let b = Tensor::<f64>::zeros(&[4, 2]);
        assert!(matches!(
            a.matmul(&b).unwrap_err(),
            TensorError::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn bmm_matches_loop_of_matmuls() {
        let a = Tensor::<f64>::new(&[2, 2, 2], (1..=8).map(|v| v as f64).collect()).unwrap();
        let b = Tensor::<f64>::new(&[2, 2, 2], (1..=8).map(|v| v as f64).collect()).unwrap();
        let out = a.bmm(&b).unwrap();
        assert_eq!(out.to_vec(), vec![7.0, 10.0, 15.0, 22.0, 67.0, 78.0, 91.0, 106.0]);
    }

    #[test]
    fn transpose_round_trip() {
        let a = Tensor::<f64>::new(&[2, 3], (1..=6).map(|v| v as f64).collect()).unwrap();
        let back = a.transpose().unwrap().transpose().unwrap();
        assert_eq!(back.to_vec(), a.to_vec());
    }
}
