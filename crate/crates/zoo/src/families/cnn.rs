use guidelab_tensor::{Element, Tensor};

use crate::batch::{Batch, BatchInput};
use crate::build::LayoutBuilder;
use crate::error::{Result, ZooError};
use crate::families::common::{activate, linear, BN_MOMENTUM, NORM_EPS};
use crate::spec::{Family, NetworkSpec};
use crate::state::NetworkState;

const KERNEL: usize = 3;

/// Constant-channel conv trunk: block 1 maps input channels to `width`, the
/// remaining blocks map width to width at stride 1 / padding 1, so spatial
/// dims never change and the res variant can use identity skips. Block 1 has
/// no skip in either variant; plain and res therefore share an identical
/// parameter layout and differ only by the additive skip in blocks 2..depth.
/// Taps: each block's post-norm (post-skip for res) pre-activation output,
/// plus the head logits.
pub(crate) fn layout<T: Element>(spec: &NetworkSpec, lb: &mut LayoutBuilder<T>) -> Result<()> {
    let c_in = spec.input_shape[0];
    let mut prev = c_in;
    for i in 1..=spec.depth {
        let p = format!("block{i:02}");
        let fan_in = prev * KERNEL * KERNEL;
        lb.weight(
            &format!("{p}.conv.weight"),
            &[spec.width, prev, KERNEL, KERNEL],
            fan_in,
        )?;
        lb.zeros(&format!("{p}.conv.bias"), &[spec.width])?;
        lb.batch_norm_site(&format!("{p}.norm"), spec.width)?;
        lb.tap(&format!("{p}.norm"));
        prev = spec.width;
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
    forward_impl(state, batch, state.spec().family == Family::ResCnn)
}

/// Shared trunk for both cnn variants; `use_skip` is the only difference.
/// Exposed to the crate so tests can check the coincidence claim directly:
/// a res net with its skip contributions removed must match the plain net
/// bit for bit.
pub(crate) fn forward_impl<T: Element>(
    state: &NetworkState<T>,
    batch: &Batch<T>,
    use_skip: bool,
) -> Result<(Tensor<T>, Vec<(String, Tensor<T>)>)> {
    let spec = state.spec();
    let BatchInput::Images(x) = &batch.input else {
        return Err(ZooError::BatchMismatch("cnn expects image input".into()));
    };
    if x.rank() != 4 || x.shape()[1..] != spec.input_shape[..] {
        return Err(ZooError::BatchMismatch(format!(
            "cnn expects (b,{},{},{}), got {:?}",
            spec.input_shape[0],
            spec.input_shape[1],
            spec.input_shape[2],
            x.shape()
        )));
    }
    let mut y = x.clone();
    let mut taps = Vec::with_capacity(spec.depth + 1);
    for i in 1..=spec.depth {
        let p = format!("block{i:02}");
        let c = y.conv2d(state.p(&format!("{p}.conv.weight")), 1, 1)?;
        let bias = state
            .p(&format!("{p}.conv.bias"))
            .reshape(&[spec.width, 1, 1])?;
        let c = c.add(&bias)?;
        let c = c.batch_norm(
            state.p(&format!("{p}.norm.gamma")),
            state.p(&format!("{p}.norm.beta")),
            state.buf(&format!("{p}.norm.running_mean")),
            state.buf(&format!("{p}.norm.running_var")),
            state.mode().norm_mode(),
            BN_MOMENTUM,
            NORM_EPS,
        )?;
        let z = if use_skip && i > 1 { c.add(&y)? } else { c };
        taps.push((format!("{p}.norm"), z.clone()));
        y = activate(&z, spec.activation)?;
    }
    let pooled = y.global_avg_pool()?;
    let logits = linear(&pooled, state.p("head.weight"), state.p("head.bias"))?;
    taps.push(("head".to_string(), logits.clone()));
    Ok((logits, taps))
}
