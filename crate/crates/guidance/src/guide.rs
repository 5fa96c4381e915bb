use guidelab_tensor::{no_grad, Element, RngState};
use guidelab_zoo::{ActivationRecord, Batch, BatchInput, NetworkState};

use crate::config::GuideInputMode;
use crate::error::Result;

/// Build the guide's input from the task batch. `Same` hands the batch over
/// untouched; `Noise` keeps the batch's shape (and padding structure for
/// token input) but replaces the content: standard-normal values for
/// continuous input, uniform draws over the guide's `guide_vocab` ids for
/// token input, where Gaussian noise has no meaning. Deterministic given the
/// rng state.
pub fn guide_batch<T: Element>(
    batch: &Batch<T>,
    mode: GuideInputMode,
    guide_vocab: usize,
    rng: &mut RngState,
) -> Result<Batch<T>> {
    match mode {
        GuideInputMode::Same => Ok(batch.clone()),
        GuideInputMode::Noise => {
            let input = match &batch.input {
                BatchInput::Images(x) => BatchInput::Images(rng.randn::<T>(x.shape())?),
                BatchInput::Tokens {
                    ids, batch, len, mask,
                } => BatchInput::Tokens {
                    ids: ids.iter().map(|_| rng.next_below(guide_vocab)).collect(),
                    batch: *batch,
                    len: *len,
                    mask: mask.clone(),
                },
            };
            Ok(Batch {
                id: batch.id,
                input,
            })
        }
    }
}

/// Run the frozen guide on its input with gradient recording off. The
/// returned record holds constants: nothing in it can route gradients back
/// into the guide, and in eval/frozen-batch modes the pass mutates no state.
pub fn guide_forward<T: Element>(
    guide: &NetworkState<T>,
    batch: &Batch<T>,
) -> Result<ActivationRecord<T>> {
    let (_, record) = no_grad(|| guide.forward_with_taps(batch))?;
    Ok(record)
}
