use guidelab_tensor::{Element, Tensor};

use crate::batch::{Batch, BatchInput};
use crate::build::LayoutBuilder;
use crate::error::{Result, ZooError};
use crate::families::common::{activate, linear, BN_MOMENTUM, NORM_EPS};
use crate::spec::NetworkSpec;
use crate::state::NetworkState;

/// Fully-connected stack: depth blocks of linear + batch norm + activation,
/// then a linear head. Taps sit at each block's post-norm pre-activation
/// output and at the head logits.
pub(crate) fn layout<T: Element>(spec: &NetworkSpec, lb: &mut LayoutBuilder<T>) -> Result<()> {
    let mut d_in = spec.in_dim();
    for i in 1..=spec.depth {
        let p = format!("block{i:02}");
        lb.weight(&format!("{p}.linear.weight"), &[d_in, spec.width], d_in)?;
        lb.zeros(&format!("{p}.linear.bias"), &[spec.width])?;
        lb.batch_norm_site(&format!("{p}.norm"), spec.width)?;
        lb.tap(&format!("{p}.norm"));
        d_in = spec.width;
    }
    lb.weight("head.weight", &[spec.width, spec.classes], spec.width)?;
    lb.zeros("head.bias", &[spec.classes])?;
    lb.tap("head");
    Ok(())
}

pub(crate) fn forward<T: Element>(
    state: &NetworkState<T>,
    batch: &Batch<T>,
) -> Result<(Tensor<T>, Vec<(String, Tensor<T>)>)> {
    let spec = state.spec();
    let BatchInput::Images(raw) = &batch.input else {
        return Err(ZooError::BatchMismatch("fcn expects image/vector input".into()));
    };
    let b = raw.shape()[0];
    let flat: usize = raw.shape()[1..].iter().product();
    if flat != spec.in_dim() {
        return Err(ZooError::BatchMismatch(format!(
            "input shape {:?} does not flatten to in_dim {}",
            raw.shape(),
            spec.in_dim()
        )));
    }
    let mut x = raw.reshape(&[b, flat])?;
    let mut taps = Vec::with_capacity(spec.depth + 1);
    for i in 1..=spec.depth {
        let p = format!("block{i:02}");
        let z = linear(
            &x,
            state.p(&format!("{p}.linear.weight")),
            state.p(&format!("{p}.linear.bias")),
        )?;
        let z = z.batch_norm(
            state.p(&format!("{p}.norm.gamma")),
            state.p(&format!("{p}.norm.beta")),
            state.buf(&format!("{p}.norm.running_mean")),
            state.buf(&format!("{p}.norm.running_var")),
            state.mode().norm_mode(),
            BN_MOMENTUM,
            NORM_EPS,
        )?;
        taps.push((format!("{p}.norm"), z.clone()));
        x = activate(&z, spec.activation)?;
    }
    let logits = linear(&x, state.p("head.weight"), state.p("head.bias"))?;
    taps.push(("head".to_string(), logits.clone()));
    Ok((logits, taps))
}
