use guidelab_tensor::{Element, Tensor};

use crate::batch::{Batch, BatchInput};
use crate::build::LayoutBuilder;
use crate::error::{Result, ZooError};
use crate::families::common::{activate, linear};
use crate::spec::NetworkSpec;
use crate::state::NetworkState;

/// Stacked Elman cells: h_t = act(x_t Wx + h_{t-1} Wh + b), hidden state
/// zeroed at the start of every sequence. Embedding and head share the
/// vocabulary in `classes`. Taps: one per layer, the full hidden sequence
/// (b,T,width); head logits are not tapped so every tap has a uniform
/// (b,T,width) shape.
pub(crate) fn layout<T: Element>(spec: &NetworkSpec, lb: &mut LayoutBuilder<T>) -> Result<()> {
    let d = spec.width;
    lb.weight("embed.weight", &[spec.classes, d], d)?;
    for l in 1..=spec.depth {
        let p = format!("layer{l:02}");
        lb.weight(&format!("{p}.wx"), &[d, d], d)?;
        lb.weight(&format!("{p}.wh"), &[d, d], d)?;
        lb.zeros(&format!("{p}.bias"), &[d])?;
        lb.tap(&p);
    }
    lb.weight("head.weight", &[d, spec.classes], d)?;
    lb.zeros("head.bias", &[spec.classes])?;
    Ok(())
}

pub(crate) fn forward<T: Element>(
    state: &NetworkState<T>,
    batch: &Batch<T>,
) -> Result<(Tensor<T>, Vec<(String, Tensor<T>)>)> {
    let spec = state.spec();
    let BatchInput::Tokens { ids, batch: b, len: t, .. } = &batch.input else {
        return Err(ZooError::BatchMismatch("rnn_stack expects token input".into()));
    };
    let (b, t) = (*b, *t);
    let max = spec.context_len.expect("validated sequence spec");
    if t > max {
        return Err(ZooError::SequenceTooLong { len: t, max });
    }
    let d = spec.width;
    let mut x = Tensor::embedding_lookup(state.p("embed.weight"), ids, &[b, t])?;
    let mut taps = Vec::with_capacity(spec.depth);
    for l in 1..=spec.depth {
        let p = format!("layer{l:02}");
        let wx = state.p(&format!("{p}.wx"));
        let wh = state.p(&format!("{p}.wh"));
        let bias = state.p(&format!("{p}.bias"));
        let mut h = Tensor::zeros(&[b, d]);
        let mut steps = Vec::with_capacity(t);
        for ti in 0..t {
            let xt = x.narrow(1, ti, 1)?.reshape(&[b, d])?;
            let pre = xt.matmul(wx)?.add(&h.matmul(wh)?)?.add(bias)?;
            h = activate(&pre, spec.activation)?;
            steps.push(h.reshape(&[b, 1, d])?);
        }
        x = Tensor::cat(&steps, 1)?;
        taps.push((p, x.clone()));
    }
    let logits = linear(&x, state.p("head.weight"), state.p("head.bias"))?;
    Ok((logits, taps))
}
