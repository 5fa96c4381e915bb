use guidelab_tensor::{Element, Tensor};

use crate::error::{Result, ZooError};

/// One forward-pass input. `id` tags the activation record produced from this
/// batch so loss bookkeeping can pair target and guide records.
#[derive(Debug, Clone)]
pub struct Batch<T: Element> {
    pub id: u64,
    pub input: BatchInput<T>,
}

#[derive(Debug, Clone)]
pub enum BatchInput<T: Element> {
    /// (b,C,H,W) images, or (b,D) vectors for fcn input.
    Images(Tensor<T>),
    /// Row-major (batch, len) token ids. `mask[i*len + j]` is true when
    /// position j of row i holds a real token; trailing false entries are
    /// padding. No mask means every position is valid.
    Tokens {
        ids: Vec<usize>,
        batch: usize,
        len: usize,
        mask: Option<Vec<bool>>,
    },
}

impl<T: Element> Batch<T> {
    pub fn images(id: u64, x: Tensor<T>) -> Self {
        Batch {
            id,
            input: BatchInput::Images(x),
        }
    }

    pub fn tokens(id: u64, ids: Vec<usize>, batch: usize, len: usize) -> Result<Self> {
        Self::tokens_masked(id, ids, batch, len, None)
    }

    pub fn tokens_masked(
        id: u64,
        ids: Vec<usize>,
        batch: usize,
        len: usize,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if ids.len() != batch * len {
            return Err(ZooError::BatchMismatch(format!(
                "{} ids do not fill a {batch}x{len} grid",
                ids.len()
            )));
        }
        if let Some(m) = &mask {
            if m.len() != batch * len {
                return Err(ZooError::BatchMismatch(format!(
                    "mask length {} does not fill a {batch}x{len} grid",
                    m.len()
                )));
            }
        }
        Ok(Batch {
            id,
            input: BatchInput::Tokens {
                ids,
                batch,
                len,
                mask,
            },
        })
    }

    pub fn batch_size(&self) -> usize {
        match &self.input {
            BatchInput::Images(x) => x.shape().first().copied().unwrap_or(0),
            BatchInput::Tokens { batch, .. } => *batch,
        }
    }

    /// The per-position validity mask, if this is a masked token batch.
    pub fn pad_mask(&self) -> Option<&[bool]> {
        match &self.input {
            BatchInput::Tokens { mask, .. } => mask.as_deref(),
            BatchInput::Images(_) => None,
        }
    }
}
