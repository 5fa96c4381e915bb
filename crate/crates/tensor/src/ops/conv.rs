use crate::autograd::{grad_enabled, Op};
use crate::error::{Result, TensorError};
use crate::ops::kernels::{conv2d_raw, ConvDims};
use crate::scalar::Element;
use crate::tensor::Tensor;

impl<T: Element> Tensor<T> {
    /// 2-D cross-correlation: input (b,c,h,w), kernel (o,c,kh,kw), zero
    /// padding on all sides.
    pub fn conv2d(&self, kernel: &Tensor<T>, stride: usize, padding: usize) -> Result<Tensor<T>> {
        if self.rank() != 4 {
            return Err(TensorError::RankError {
                op: "conv2d",
                expected: 4,
                shape: self.shape().to_vec(),
            });
        }
        if kernel.rank() != 4 {
            return Err(TensorError::RankError {
                op: "conv2d",
                expected: 4,
                shape: kernel.shape().to_vec(),
            });
        }
        if stride == 0 {
            return Err(TensorError::InvalidArgument {
                op: "conv2d",
                msg: "stride must be positive".into(),
            });
        }
        let (b, c_in, h, w) = (
            self.shape()[0],
            self.shape()[1],
            self.shape()[2],
            self.shape()[3],
        );
        let (c_out, kc, kh, kw) = (
            kernel.shape()[0],
            kernel.shape()[1],
            kernel.shape()[2],
            kernel.shape()[3],
        );
        if kc != c_in {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: self.shape().to_vec(),
                rhs: kernel.shape().to_vec(),
            });
        }
        if h + 2 * padding < kh || w + 2 * padding < kw {
            return Err(TensorError::InvalidArgument {
                op: "conv2d",
                msg: format!(
                    "kernel {}x{} exceeds padded input {}x{}",
                    kh,
                    kw,
                    h + 2 * padding,
                    w + 2 * padding
                ),
            });
        }
        let oh = (h + 2 * padding - kh) / stride + 1;
        let ow = (w + 2 * padding - kw) / stride + 1;
        let dims = ConvDims {
            b,
            c_in,
            h,
            w,
            c_out,
            kh,
            kw,
            oh,
            ow,
            stride,
            pad: padding,
        };
        let data = self.with_data(|x| kernel.with_data(|k| conv2d_raw(x, k, &dims)));
        let record = grad_enabled() && (self.requires_grad() || kernel.requires_grad());
        let node = record.then(|| Op::Conv2d {
            x: self.clone(),
            k: kernel.clone(),
            stride,
            padding,
        });
        Tensor::from_op("conv2d", vec![b, c_out, oh, ow], data, node)
    }
}
