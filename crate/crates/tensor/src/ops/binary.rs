use crate::autograd::{grad_enabled, Op};
use crate::error::Result;
use crate::ops::broadcast::{binary_map, broadcast_shapes};
use crate::scalar::Element;
use crate::tensor::Tensor;

fn binary<T: Element>(
    name: &'static str,
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
    op: impl FnOnce(Tensor<T>, Tensor<T>) -> Op<T>,
) -> Result<Tensor<T>> {
    let out_shape = broadcast_shapes(name, a.shape(), b.shape())?;
    let data = a.with_data(|ad| {
        b.with_data(|bd| binary_map(a.shape(), ad, b.shape(), bd, &out_shape, f))
    });
    let record = grad_enabled() && (a.requires_grad() || b.requires_grad());
    let node = record.then(|| op(a.clone(), b.clone()));
    Tensor::from_op(name, out_shape, data, node)
}

impl<T: Element> Tensor<T> {
    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary("add", self, other, |x, y| x + y, |a, b| Op::Add { a, b })
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary("sub", self, other, |x, y| x - y, |a, b| Op::Sub { a, b })
    }

    pub fn mul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary("mul", self, other, |x, y| x * y, |a, b| Op::Mul { a, b })
    }

    pub fn div(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary("div", self, other, |x, y| x / y, |a, b| Op::Div { a, b })
    }

    pub fn scale(&self, c: T) -> Result<Tensor<T>> {
        let data = self.with_data(|d| d.iter().map(|&x| x * c).collect());
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::Scale { a: self.clone(), c });
        Tensor::from_op("scale", self.shape().to_vec(), data, node)
    }

    pub fn add_scalar(&self, c: T) -> Result<Tensor<T>> {
        let data = self.with_data(|d| d.iter().map(|&x| x + c).collect());
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::AddScalar { a: self.clone() });
        Tensor::from_op("add_scalar", self.shape().to_vec(), data, node)
    }

    pub fn neg(&self) -> Result<Tensor<T>> {
        let data = self.with_data(|d| d.iter().map(|&x| -x).collect());
        let record = grad_enabled() && self.requires_grad();
        let node = record.then(|| Op::Neg { a: self.clone() });
        Tensor::from_op("neg", self.shape().to_vec(), data, node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_broadcasts_bias() {
        let x = Tensor::<f64>::new(&[2, 3], vec![1.0; 6]).unwrap();
        let b = Tensor::<f64>::new(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let y = x.add(&b).unwrap();
        assert_eq!(y.shape(), &[2, 3]);
        assert_eq!(y.to_vec(), vec![2.0, 3.0, 4.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn incompatible_shapes_error() {
        let x = Tensor::<f64>::zeros(&[2, 3]);
        let y = Tensor::<f64>::zeros(&[2, 4]);
        assert!(x.add(&y).is_err());
    }

    #[test]
    fn div_by_zero_is_caught() {
        let x = Tensor::<f64>::new(&[1], vec![1.0]).unwrap();
        let z = Tensor::<f64>::zeros(&[1]);
        assert!(x.div(&z).is_err());
    }

    #[test]
    fn broadcast_grads_reduce_to_leaf_shape() {
        let x = Tensor::<f64>::param(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::<f64>::param(&[2], vec![10.0, 20.0]).unwrap();
        let loss = x.mul(&b).unwrap().sum_all().unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![10.0, 20.0, 10.0, 20.0]);
        assert_eq!(b.grad().unwrap(), vec![4.0, 6.0]);
    }
}
