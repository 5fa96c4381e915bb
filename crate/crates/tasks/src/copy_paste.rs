use guidelab_tensor::RngState;

use crate::error::{Result, TaskError};
use crate::types::{split_80_10_10, DatasetSplit, SequenceExample, IGNORE_TARGET};

/// Token id used for padding, both inside examples and by batch collators.
pub const PAD_ID: usize = 0;

/// Separator id for a content vocabulary of `vocab_size` symbols.
///
/// Content ids are `1..=vocab_size`, pad is 0, and the separator sits one past
/// the content range, so networks need `vocab_size + 2` ids in total.
pub fn copy_paste_sep(vocab_size: usize) -> usize {
    vocab_size + 1
}

/// Number of distinct token ids a network must handle for this task.
pub fn copy_paste_vocab(vocab_size: usize) -> usize {
    vocab_size + 2
}

/// Copy-paste generator settings.
///
/// `len_range` bounds the total example footprint `2k + 2` where `k` is the
/// content length, so the default 20..=40 admits k in 9..=19 and sequences of
/// 19 to 39 tokens.
#[derive(Debug, Clone)]
pub struct CopyPasteConfig {
    pub n: usize,
    pub len_range: (usize, usize),
    pub vocab_size: usize,
}

impl Default for CopyPasteConfig {
    fn default() -> Self {
        Self {
            n: 100_000,
            len_range: (20, 40),
            vocab_size: 10,
        }
    }
}

impl CopyPasteConfig {
    /// Content lengths admitted by `len_range`, as an inclusive k range.
    pub fn content_range(&self) -> Result<(usize, usize)> {
        let (lo, hi) = self.len_range;
        if lo > hi {
            return Err(TaskError::InfeasibleLengths { lo, hi });
        }
        // Smallest k with 2k + 2 >= lo, largest with 2k + 2 <= hi.
        let k_lo = (lo.max(2) - 2).div_ceil(2).max(1);
        if hi < 2 * k_lo + 2 {
            return Err(TaskError::InfeasibleLengths { lo, hi });
        }
        let k_hi = (hi - 2) / 2;
        Ok((k_lo, k_hi))
    }
}

/// Build one example: input `s ++ SEP ++ PAD^k`, target ignores through the
/// separator then repeats `s`.
fn make_example(content: &[usize], vocab_size: usize) -> SequenceExample {
    let k = content.len();
    let sep = copy_paste_sep(vocab_size);
    let mut input = Vec::with_capacity(2 * k + 1);
    input.extend_from_slice(content);
    input.push(sep);
    input.extend(std::iter::repeat(PAD_ID).take(k));
    let mut target = vec![IGNORE_TARGET; k + 1];
    target.extend(content.iter().map(|&t| t as i64));
    SequenceExample::new(input, target).expect("lengths match by construction")
}

/// Generate a copy-paste dataset split 80/10/10.
///
/// Content tokens are drawn uniformly from `1..=vocab_size` and the content
/// length uniformly from the admitted k range. The same seed always
/// reproduces the same examples and manifest digest.
pub fn gen_copy_paste(config: &CopyPasteConfig, seed: u64) -> Result<DatasetSplit<SequenceExample>> {
    if config.n == 0 {
        return Err(TaskError::InvalidConfig("need at least one example".into()));
    }
    if config.vocab_size == 0 {
        return Err(TaskError::InvalidConfig(
            "content vocabulary must be nonempty".into(),
        ));
    }
    let (k_lo, k_hi) = config.content_range()?;
    let mut rng = RngState::new(seed);
    let mut items = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let k = rng.next_range_inclusive(k_lo, k_hi);
        let content: Vec<usize> = (0..k)
            .map(|_| rng.next_range_inclusive(1, config.vocab_size))
            .collect();
        items.push(make_example(&content, config.vocab_size));
    }
    Ok(split_80_10_10(items, seed))
}
