use guidelab_tensor::{Element, Tensor};

use crate::batch::{Batch, BatchInput};
use crate::build::LayoutBuilder;
use crate::error::{Result, ZooError};
use crate::families::common::{activate, attention, causal_mask, linear, pad_mask, NORM_EPS};
use crate::spec::{Family, NetworkSpec};
use crate::state::NetworkState;

/// MLP hidden size as a multiple of the model width.
pub(crate) const MLP_RATIO: usize = 4;

/// Lay out one pre-LN transformer layer (attention + MLP sublayers) under
/// `prefix`. Shared by the encoder/decoder families and the vision variant.
pub(crate) fn layer_layout<T: Element>(
    lb: &mut LayoutBuilder<T>,
    prefix: &str,
    d: usize,
) -> Result<()> {
    lb.layer_norm_site(&format!("{prefix}.ln1"), d)?;
    for proj in ["wq", "wk", "wv", "wo"] {
        lb.weight(&format!("{prefix}.attn.{proj}"), &[d, d], d)?;
        lb.zeros(&format!("{prefix}.attn.b{}", &proj[1..]), &[d])?;
    }
    lb.layer_norm_site(&format!("{prefix}.ln2"), d)?;
    lb.weight(&format!("{prefix}.mlp.w1"), &[d, MLP_RATIO * d], d)?;
    lb.zeros(&format!("{prefix}.mlp.b1"), &[MLP_RATIO * d])?;
    lb.weight(&format!("{prefix}.mlp.w2"), &[MLP_RATIO * d, d], MLP_RATIO * d)?;
    lb.zeros(&format!("{prefix}.mlp.b2"), &[d])?;
    Ok(())
}

/// One pre-LN layer: x += attn(ln1(x)); x += mlp(ln2(x)). Returns the
/// residual-stream output.
pub(crate) fn layer_forward<T: Element>(
    state: &NetworkState<T>,
    prefix: &str,
    x: &Tensor<T>,
    heads: usize,
    mask_add: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    let a_in = x.layer_norm(
        state.p(&format!("{prefix}.ln1.gamma")),
        state.p(&format!("{prefix}.ln1.beta")),
        NORM_EPS,
    )?;
    let attn_out = attention(state, &format!("{prefix}.attn"), &a_in, heads, mask_add)?;
    let x = x.add(&attn_out)?;
    let m_in = x.layer_norm(
        state.p(&format!("{prefix}.ln2.gamma")),
        state.p(&format!("{prefix}.ln2.beta")),
        NORM_EPS,
    )?;
    let hidden = activate(
        &linear(
            &m_in,
            state.p(&format!("{prefix}.mlp.w1")),
            state.p(&format!("{prefix}.mlp.b1")),
        )?,
        state.spec().activation,
    )?;
    let mlp_out = linear(
        &hidden,
        state.p(&format!("{prefix}.mlp.w2")),
        state.p(&format!("{prefix}.mlp.b2")),
    )?;
    Ok(x.add(&mlp_out)?)
}

/// Pre-LN token transformer with learned absolute positions. The decoder
/// variant applies a causal mask; the encoder applies a key-padding mask
/// when the batch carries one. Taps: one per layer, the residual-stream
/// output (b,T,width); the final layer norm and logits head are shared
/// plumbing and not tapped, keeping every tap (b,T,width) shaped.
pub(crate) fn layout<T: Element>(spec: &NetworkSpec, lb: &mut LayoutBuilder<T>) -> Result<()> {
    let d = spec.width;
    lb.weight("embed.weight", &[spec.classes, d], d)?;
    lb.weight("pos.weight", &[spec.context_len.unwrap(), d], d)?;
    for l in 1..=spec.depth {
        let p = format!("layer{l:02}");
        layer_layout(lb, &p, d)?;
        lb.tap(&p);
    }
    lb.layer_norm_site("final_norm", d)?;
    lb.weight("head.weight", &[d, spec.classes], d)?;
    lb.zeros("head.bias", &[spec.classes])?;
    Ok(())
}

pub(crate) fn forward<T: Element>(
    state: &NetworkState<T>,
    batch: &Batch<T>,
) -> Result<(Tensor<T>, Vec<(String, Tensor<T>)>)> {
    let spec = state.spec();
    let BatchInput::Tokens { ids, batch: b, len: t, mask } = &batch.input else {
        return Err(ZooError::BatchMismatch("transformer expects token input".into()));
    };
    let (b, t) = (*b, *t);
    let max = spec.context_len.expect("validated sequence spec");
    if t > max {
        return Err(ZooError::SequenceTooLong { len: t, max });
    }
    let heads = spec.heads.expect("validated attention spec");
    let embedded = Tensor::embedding_lookup(state.p("embed.weight"), ids, &[b, t])?;
    let pos = state.p("pos.weight").narrow(0, 0, t)?;
    let mut x = embedded.add(&pos)?;
    let mask_add = match spec.family {
        Family::TransformerDecoder => Some(causal_mask::<T>(t)?),
        _ => match mask {
            Some(m) => Some(pad_mask::<T>(m, b, t, heads)?),
            None => None,
        },
    };
    let mut taps = Vec::with_capacity(spec.depth);
    for l in 1..=spec.depth {
        let p = format!("layer{l:02}");
        x = layer_forward(state, &p, &x, heads, mask_add.as_ref())?;
        taps.push((p, x.clone()));
    }
    let y = x.layer_norm(
        state.p("final_norm.gamma"),
        state.p("final_norm.beta"),
        NORM_EPS,
    )?;
    let logits = linear(&y, state.p("head.weight"), state.p("head.bias"))?;
    Ok((logits, taps))
}
