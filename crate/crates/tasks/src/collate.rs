use guidelab_tensor::RngState;

use crate::error::{Result, TaskError};
use crate::types::{ImageExample, ParityExample, SequenceExample, IGNORE_TARGET};

/// A rectangular token batch ready to feed a sequence network.
///
/// `ids` and `targets` are row-major `(batch, len)`; positions appended by
/// padding carry the pad id, an ignore target, and a false mask bit.
#[derive(Debug, Clone)]
pub struct TokenBatchData {
    pub ids: Vec<usize>,
    pub targets: Vec<i64>,
    pub mask: Vec<bool>,
    pub batch: usize,
    pub len: usize,
}

/// A dense image batch with `(batch, channels, height, width)` pixels.
#[derive(Debug, Clone)]
pub struct ImageBatchData {
    pub pixels: Vec<f32>,
    pub labels: Vec<i64>,
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

fn gather<'a, E>(items: &'a [E], idx: &[usize], what: &'static str) -> Result<Vec<&'a E>> {
    idx.iter()
        .map(|&i| {
            items.get(i).ok_or(TaskError::SizeMismatch {
                what,
                expect: items.len(),
                got: i,
            })
        })
        .collect()
}

/// Pad the selected sequences to a common length.
pub fn collate_sequences(
    items: &[SequenceExample],
    idx: &[usize],
    pad_id: usize,
) -> Result<TokenBatchData> {
    let picked = gather(items, idx, "sequence index")?;
    if picked.is_empty() {
        return Err(TaskError::InvalidConfig("empty batch".into()));
    }
    let len = picked.iter().map(|ex| ex.len()).max().unwrap();
    let batch = picked.len();
    let mut ids = Vec::with_capacity(batch * len);
    let mut targets = Vec::with_capacity(batch * len);
    let mut mask = Vec::with_capacity(batch * len);
    for ex in picked {
        ids.extend_from_slice(&ex.input_tokens);
        targets.extend_from_slice(&ex.target_tokens);
        mask.extend_from_slice(&ex.pad_mask);
        for _ in ex.len()..len {
            ids.push(pad_id);
            targets.push(IGNORE_TARGET);
            mask.push(false);
        }
    }
    Ok(TokenBatchData {
        ids,
        targets,
        mask,
        batch,
        len,
    })
}

/// Turn parity bitstrings into a token batch whose only live target is the
/// label at each example's final real position.
pub fn collate_parity(items: &[ParityExample], idx: &[usize]) -> Result<TokenBatchData> {
    let picked = gather(items, idx, "parity index")?;
    if picked.is_empty() {
        return Err(TaskError::InvalidConfig("empty batch".into()));
    }
    let len = picked.iter().map(|ex| ex.bits.len()).max().unwrap();
    let batch = picked.len();
    let mut ids = Vec::with_capacity(batch * len);
    let mut targets = Vec::with_capacity(batch * len);
    let mut mask = Vec::with_capacity(batch * len);
    for ex in picked {
        let n = ex.bits.len();
        ids.extend(ex.bits.iter().map(|&b| b as usize));
        targets.extend(std::iter::repeat(IGNORE_TARGET).take(n - 1));
        targets.push(ex.label as i64);
        mask.extend(std::iter::repeat(true).take(n));
        for _ in n..len {
            ids.push(0);
            targets.push(IGNORE_TARGET);
            mask.push(false);
        }
    }
    Ok(TokenBatchData {
        ids,
        targets,
        mask,
        batch,
        len,
    })
}

/// Stack images channel-major into one dense block.
pub fn collate_images(items: &[ImageExample], idx: &[usize]) -> Result<ImageBatchData> {
    let picked = gather(items, idx, "image index")?;
    let first = picked
        .first()
        .ok_or_else(|| TaskError::InvalidConfig("empty batch".into()))?;
    let (c, h, w) = (first.channels, first.height, first.width);
    let mut pixels = Vec::with_capacity(picked.len() * c * h * w);
    let mut labels = Vec::with_capacity(picked.len());
    for ex in &picked {
        if (ex.channels, ex.height, ex.width) != (c, h, w) {
            return Err(TaskError::InvalidConfig(
                "images in one batch must share a shape".into(),
            ));
        }
        pixels.extend_from_slice(&ex.pixels);
        labels.push(ex.label as i64);
    }
    Ok(ImageBatchData {
        pixels,
        labels,
        batch: picked.len(),
        channels: c,
        height: h,
        width: w,
    })
}

/// Plan one epoch of index batches.
///
/// Pass a seeded stream to shuffle (training); `None` keeps dataset order
/// (evaluation). With `drop_last` a trailing partial batch is discarded.
pub fn batch_indices(
    n: usize,
    batch_size: usize,
    drop_last: bool,
    shuffle: Option<&mut RngState>,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(TaskError::InvalidConfig("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(rng) = shuffle {
        rng.shuffle(&mut order);
    }
    let mut out = Vec::with_capacity(n.div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        if chunk.len() < batch_size && drop_last {
            break;
        }
        out.push(chunk.to_vec());
    }
    Ok(out)
}
