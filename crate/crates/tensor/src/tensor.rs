use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::autograd::Op;
use crate::error::{Result, TensorError};
use crate::scalar::Element;

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct TensorId(u64);

fn next_id() -> TensorId {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    TensorId(COUNTER.fetch_add(1, Ordering::Relaxed))
}

pub(crate) struct TensorInner<T: Element> {
    id: TensorId,
    shape: Vec<usize>,
    data: RwLock<Vec<T>>,
    op: Option<Op<T>>,
    requires_grad: bool,
    grad: RwLock<Option<Vec<T>>>,
}

/// Dense row-major tensor. Cloning is cheap (shared storage); ops build a
/// backward graph by holding their inputs.
pub struct Tensor<T: Element = f32> {
    pub(crate) inner: Arc<TensorInner<T>>,
}

impl<T: Element> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Element> std::fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .finish()
    }
}

fn check_len<T: Element>(shape: &[usize], data: &[T]) -> Result<()> {
    let numel: usize = shape.iter().product();
    if numel != data.len() {
        return Err(TensorError::DataLength {
            len: data.len(),
            shape: shape.to_vec(),
        });
    }
    Ok(())
}

fn check_finite<T: Element>(op: &'static str, data: &[T]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TensorError::NonFinite { op })
    }
}

impl<T: Element> Tensor<T> {
    fn build(
        shape: Vec<usize>,
        data: Vec<T>,
        op: Option<Op<T>>,
        requires_grad: bool,
    ) -> Self {
        Self {
            inner: Arc::new(TensorInner {
                id: next_id(),
                shape,
                data: RwLock::new(data),
                op,
                requires_grad,
                grad: RwLock::new(None),
            }),
        }
    }

    /// Constant leaf. Rejects non-finite values so the invariant "all stored
    /// scalars are finite" holds from construction on.
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        check_len(shape, &data)?;
        check_finite("new", &data)?;
        Ok(Self::build(shape.to_vec(), data, None, false))
    }

    /// Trainable leaf: gradients accumulate here during backward.
    pub fn param(shape: &[usize], data: Vec<T>) -> Result<Self> {
        check_len(shape, &data)?;
        check_finite("param", &data)?;
        Ok(Self::build(shape.to_vec(), data, None, true))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::build(shape.to_vec(), vec![T::zero(); n], None, false)
    }

    pub fn ones(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::build(shape.to_vec(), vec![T::one(); n], None, false)
    }

    pub fn full(shape: &[usize], value: T) -> Result<Self> {
        let n = shape.iter().product();
        check_finite("full", &[value])?;
        Ok(Self::build(shape.to_vec(), vec![value; n], None, false))
    }

    pub fn scalar(value: T) -> Result<Self> {
        Self::new(&[], vec![value])
    }

    /// Internal constructor for op outputs. Every kernel funnels through here,
    /// which is where the NaN/Inf guard lives.
    pub(crate) fn from_op(
        name: &'static str,
        shape: Vec<usize>,
        data: Vec<T>,
        op: Option<Op<T>>,
    ) -> Result<Self> {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        check_finite(name, &data)?;
        let requires_grad = op.is_some();
        Ok(Self::build(shape, data, op, requires_grad))
    }

    pub fn id(&self) -> TensorId {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn rank(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub(crate) fn op(&self) -> Option<&Op<T>> {
        self.inner.op.as_ref()
    }

    pub fn is_leaf(&self) -> bool {
        self.inner.op.is_none()
    }

    /// Ids of the inputs this tensor was computed from (empty for leaves).
    pub fn parent_ids(&self) -> Vec<TensorId> {
        match &self.inner.op {
            None => Vec::new(),
            Some(op) => op.inputs().iter().map(|t| t.id()).collect(),
        }
    }

    pub fn with_data<R>(&self, f: impl FnOnce(&[T]) -> R) -> R {
        let guard = self.inner.data.read().expect("tensor data lock poisoned");
        f(&guard)
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.with_data(|d| d.to_vec())
    }

    pub fn item(&self) -> Result<T> {
        if self.numel() != 1 {
            return Err(TensorError::RankError {
                op: "item",
                expected: 0,
                shape: self.shape().to_vec(),
            });
        }
        Ok(self.with_data(|d| d[0]))
    }

    /// Replaces the stored values in place. Shape is fixed for the lifetime of
    /// a tensor; optimizers and running statistics go through this.
    pub fn set_data(&self, data: Vec<T>) -> Result<()> {
        check_len(self.shape(), &data)?;
        check_finite("set_data", &data)?;
        let mut guard = self.inner.data.write().expect("tensor data lock poisoned");
        *guard = data;
        Ok(())
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.read().expect("grad lock poisoned").clone()
    }

    /// Resets the gradient buffer to zeros. Backward accumulates, so training
    /// loops call this once per step before the backward pass.
    pub fn zero_grad(&self) {
        let mut guard = self.inner.grad.write().expect("grad lock poisoned");
        *guard = Some(vec![T::zero(); self.numel()]);
    }

    /// Overwrites the gradient buffer. Length-checked but not finiteness
    /// checked: gradient consumers (optimizer, clipping) do that themselves.
    pub fn set_grad(&self, g: Vec<T>) -> Result<()> {
        if g.len() != self.numel() {
            return Err(TensorError::DataLength {
                len: g.len(),
                shape: self.shape().to_vec(),
            });
        }
        let mut guard = self.inner.grad.write().expect("grad lock poisoned");
        *guard = Some(g);
        Ok(())
    }

    pub(crate) fn accumulate_grad(&self, g: &[T]) {
        let mut guard = self.inner.grad.write().expect("grad lock poisoned");
        match guard.as_mut() {
            Some(buf) => {
                for (b, &x) in buf.iter_mut().zip(g) {
                    *b += x;
                }
            }
            None => *guard = Some(g.to_vec()),
        }
    }

    /// Copy of the values with no graph attached.
    pub fn detach(&self) -> Tensor<T> {
        Self::build(self.shape().to_vec(), self.to_vec(), None, false)
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}
