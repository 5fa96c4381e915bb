use guidelab_tensor::{Element, Tensor};

use crate::error::Result;
use crate::spec::Activation;
use crate::state::NetworkState;

pub(crate) const NORM_EPS: f64 = 1e-5;
pub(crate) const BN_MOMENTUM: f64 = 0.1;
/// Additive attention-mask value. Large enough that exp underflows to exactly
/// zero after the softmax max-shift, small enough to stay finite in f32.
pub(crate) const MASK_NEG: f64 = -1e9;

pub(crate) fn activate<T: Element>(x: &Tensor<T>, act: Activation) -> Result<Tensor<T>> {
    match act {
        Activation::Relu => x.relu(),
        Activation::Tanh => x.tanh_act(),
    }
    .map_err(Into::into)
}

/// x (.., in) @ w (in, out) + b (out), applied over the trailing axis.
pub(crate) fn linear<T: Element>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<Tensor<T>> {
    let shape = x.shape().to_vec();
    let d_in = *shape.last().expect("linear input must have rank >= 1");
    let rows: usize = shape[..shape.len() - 1].iter().product();
    let flat = x.reshape(&[rows, d_in])?;
    let y = flat.matmul(w)?.add(b)?;
    let mut out_shape = shape;
    *out_shape.last_mut().unwrap() = w.shape()[1];
    Ok(y.reshape(&out_shape)?)
}

/// Additive causal mask (t,t): 0 on and below the diagonal, MASK_NEG above.
/// Broadcasts over the (b*heads) leading axis of a score tensor.
pub(crate) fn causal_mask<T: Element>(t: usize) -> Result<Tensor<T>> {
    let neg = T::from_f64(MASK_NEG);
    let mut data = vec![T::zero(); t * t];
    for i in 0..t {
        for j in (i + 1)..t {
            data[i * t + j] = neg;
        }
    }
    Ok(Tensor::new(&[t, t], data)?)
}

/// Additive key-padding mask (b*heads, t, t): MASK_NEG wherever the key
/// position is padding, so no query attends to padded tokens.
pub(crate) fn pad_mask<T: Element>(
    mask: &[bool],
    b: usize,
    t: usize,
    heads: usize,
) -> Result<Tensor<T>> {
    let neg = T::from_f64(MASK_NEG);
    let mut data = vec![T::zero(); b * heads * t * t];
    for bi in 0..b {
        for j in 0..t {
            if mask[bi * t + j] {
                continue;
            }
            for h in 0..heads {
                let base = (bi * heads + h) * t * t;
                for i in 0..t {
                    data[base + i * t + j] = neg;
                }
            }
        }
    }
    Ok(Tensor::new(&[b * heads, t, t], data)?)
}

/// Multi-head scaled dot-product attention over x (b,t,d) using the four
/// projection parameters under `prefix` (wq/bq, wk/bk, wv/bv, wo/bo).
/// `mask_add` is added to the raw scores; it is either (t,t) or
/// (b*heads, t, t).
pub(crate) fn attention<T: Element>(
    state: &NetworkState<T>,
    prefix: &str,
    x: &Tensor<T>,
    heads: usize,
    mask_add: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    let (b, t, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let dh = d / heads;
    let get = |suffix: &str| state.p(&format!("{prefix}.{suffix}"));
    let q = linear(x, get("wq"), get("bq"))?;
    let k = linear(x, get("wk"), get("bk"))?;
    let v = linear(x, get("wv"), get("bv"))?;
    // (b,t,d) -> (b*heads, t, dh)
    let split = |y: &Tensor<T>| -> Result<Tensor<T>> {
        Ok(y.reshape(&[b, t, heads, dh])?
            .permute(&[0, 2, 1, 3])?
            .reshape(&[b * heads, t, dh])?)
    };
    let qh = split(&q)?;
    let kh = split(&k)?;
    let vh = split(&v)?;
    let kt = kh.permute(&[0, 2, 1])?;
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let mut scores = qh.bmm(&kt)?.scale(scale)?;
    if let Some(m) = mask_add {
        scores = scores.add(m)?;
    }
    let weights = scores.softmax_last()?;
    let ctx = weights.bmm(&vh)?;
    let merged = ctx
        .reshape(&[b, heads, t, dh])?
        .permute(&[0, 2, 1, 3])?
        .reshape(&[b, t, d])?;
    Ok(linear(&merged, get("wo"), get("bo"))?)
}
