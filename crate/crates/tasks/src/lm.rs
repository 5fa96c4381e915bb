use std::path::Path;

use guidelab_tensor::RngState;

use crate::error::{Result, TaskError};
use crate::types::{split_80_10_10, DatasetSplit, SequenceExample};

/// Byte ids 0..=255 plus one reserved pad special, so language models are
/// built with 257 token ids even though windows never contain the special.
pub const BYTE_VOCAB: usize = 257;
pub const BYTE_PAD_ID: usize = 256;

/// Default context window length in tokens.
pub const DEFAULT_CONTEXT_LEN: usize = 50;

/// Cut a corpus into non-overlapping next-byte-prediction windows.
///
/// Window i covers input bytes `[i*L, i*L + L)` with `target[t] = input[t+1]`;
/// the final target peeks one byte past the window, so a trailing window
/// without that byte is dropped. Windows are shuffled with `seed` before the
/// 80/10/10 split so every split samples the whole corpus.
pub fn build_lm_dataset(
    corpus_path: impl AsRef<Path>,
    context_len: usize,
    seed: u64,
) -> Result<DatasetSplit<SequenceExample>> {
    let path = corpus_path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| TaskError::io(path, e))?;
    build_lm_dataset_from_bytes(&bytes, context_len, seed)
}

pub fn build_lm_dataset_from_bytes(
    bytes: &[u8],
    context_len: usize,
    seed: u64,
) -> Result<DatasetSplit<SequenceExample>> {
    if context_len < 2 {
        return Err(TaskError::InvalidConfig(
            "context length must be at least 2".into(),
        ));
    }
    if std::str::from_utf8(bytes).is_err() {
        return Err(TaskError::CorpusNotUtf8);
    }
    let need = 10 * context_len;
    if bytes.len() < need {
        return Err(TaskError::CorpusTooSmall {
            need,
            got: bytes.len(),
        });
    }
    let mut items = Vec::new();
    let mut start = 0;
    while start + context_len + 1 <= bytes.len() {
        let input: Vec<usize> = bytes[start..start + context_len]
            .iter()
            .map(|&b| b as usize)
            .collect();
        let target: Vec<i64> = bytes[start + 1..start + context_len + 1]
            .iter()
            .map(|&b| b as i64)
            .collect();
        items.push(SequenceExample::new(input, target)?);
        start += context_len;
    }
    let mut rng = RngState::new(seed);
    rng.shuffle(&mut items);
    Ok(split_80_10_10(items, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_shift_by_one() {
        let corpus: Vec<u8> = b"abcabc".iter().cycle().take(200).copied().collect();
        let split = build_lm_dataset_from_bytes(&corpus, 10, 1).unwrap();
        for ex in split
            .train
            .iter()
            .chain(split.val.iter())
            .chain(split.test.iter())
        {
            assert_eq!(ex.len(), 10);
            for t in 0..ex.len() - 1 {
                assert_eq!(ex.target_tokens[t], ex.input_tokens[t + 1] as i64);
            }
        }
    }

    #[test]
    fn small_corpus_is_rejected() {
        let err = build_lm_dataset_from_bytes(b"tiny", 50, 0).unwrap_err();
        assert!(matches!(err, TaskError::CorpusTooSmall { need: 500, .. }));
    }
}
