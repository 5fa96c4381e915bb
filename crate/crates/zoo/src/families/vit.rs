use guidelab_tensor::{Element, Tensor};

use crate::batch::{Batch, BatchInput};
use crate::build::LayoutBuilder;
use crate::error::{Result, ZooError};
use crate::families::common::{linear, NORM_EPS};
use crate::families::transformer::{layer_forward, layer_layout};
use crate::spec::NetworkSpec;
use crate::state::NetworkState;

/// Patch transformer for images: non-overlapping conv patch embedding,
/// learned per-patch positions, pre-LN encoder layers, then a mean-pooled
/// linear head. Taps: each layer's residual-stream output (b,N,width) plus
/// the head logits, matching the block+head convention of the other image
/// families.
pub(crate) fn layout<T: Element>(spec: &NetworkSpec, lb: &mut LayoutBuilder<T>) -> Result<()> {
    let d = spec.width;
    let c = spec.input_shape[0];
    let p = spec.patch_size.unwrap();
    lb.weight("patch.weight", &[d, c, p, p], c * p * p)?;
    lb.zeros("patch.bias", &[d])?;
    lb.weight("pos.weight", &[spec.patch_count(), d], d)?;
    for l in 1..=spec.depth {
        let name = format!("layer{l:02}");
        layer_layout(lb, &name, d)?;
        lb.tap(&name);
    }
    lb.layer_norm_site("final_norm", d)?;
    lb.weight("head.weight", &[d, spec.classes], d)?;
    lb.zeros("head.bias", &[spec.classes])?;
    lb.tap("head");
    Ok(())
}

pub(crate) fn forward<T: Element>(
    state: &NetworkState<T>,
    batch: &Batch<T>,
) -> Result<(Tensor<T>, Vec<(String, Tensor<T>)>)> {
    let spec = state.spec();
    let BatchInput::Images(x) = &batch.input else {
        return Err(ZooError::BatchMismatch("patch_vit expects image input".into()));
    };
    if x.rank() != 4 || x.shape()[1..] != spec.input_shape[..] {
        return Err(ZooError::BatchMismatch(format!(
            "patch_vit expects (b,{},{},{}), got {:?}",
            spec.input_shape[0],
            spec.input_shape[1],
            spec.input_shape[2],
            x.shape()
        )));
    }
    let b = x.shape()[0];
    let d = spec.width;
    let p = spec.patch_size.unwrap();
    let n = spec.patch_count();
    let heads = spec.heads.expect("validated attention spec");
    let patches = x.conv2d(state.p("patch.weight"), p, 0)?;
    let bias = state.p("patch.bias").reshape(&[d, 1, 1])?;
    let patches = patches.add(&bias)?;
    let mut tokens = patches.reshape(&[b, d, n])?.permute(&[0, 2, 1])?;
    tokens = tokens.add(state.p("pos.weight"))?;
    let mut taps = Vec::with_capacity(spec.depth + 1);
    for l in 1..=spec.depth {
        let name = format!("layer{l:02}");
        tokens = layer_forward(state, &name, &tokens, heads, None)?;
        taps.push((name, tokens.clone()));
    }
    let y = tokens.layer_norm(
        state.p("final_norm.gamma"),
        state.p("final_norm.beta"),
        NORM_EPS,
    )?;
    let pooled = y.sum_axis1()?.scale(T::from_f64(1.0 / n as f64))?;
    let logits = linear(&pooled, state.p("head.weight"), state.p("head.bias"))?;
    taps.push(("head".to_string(), logits.clone()));
    Ok((logits, taps))
}
