use crate::autograd::{grad_enabled, stable_sigmoid, Op};
use crate::error::Result;
use crate::scalar::Element;
use crate::tensor::Tensor;

fn unary<T: Element>(
    name: &'static str,
    a: &Tensor<T>,
    f: impl Fn(T) -> T,
    op: impl FnOnce(Tensor<T>) -> Op<T>,
) -> Result<Tensor<T>> {
    let data = a.with_data(|d| d.iter().map(|&x| f(x)).collect());
    let record = grad_enabled() && a.requires_grad();
    let node = record.then(|| op(a.clone()));
    Tensor::from_op(name, a.shape().to_vec(), data, node)
}

impl<T: Element> Tensor<T> {
    pub fn relu(&self) -> Result<Tensor<T>> {
        unary(
            "relu",
            self,
            |x| if x > T::zero() { x } else { T::zero() },
            |a| Op::Relu { a },
        )
    }

    pub fn tanh_act(&self) -> Result<Tensor<T>> {
        unary("tanh", self, |x| x.tanh(), |a| Op::Tanh { a })
    }

    pub fn sigmoid(&self) -> Result<Tensor<T>> {
        unary("sigmoid", self, stable_sigmoid, |a| Op::Sigmoid { a })
    }

    /// Derivative is g/(2*sqrt(x)); callers must keep inputs strictly positive
    /// (a zero input turns into an infinite gradient, caught at the optimizer).
    pub fn sqrt_elem(&self) -> Result<Tensor<T>> {
        unary("sqrt", self, |x| x.sqrt(), |a| Op::Sqrt { a })
    }

    pub fn square(&self) -> Result<Tensor<T>> {
        self.mul(self)
    }
}
