use guidelab_tensor::RngState;

use crate::error::{Result, TaskError};
use crate::types::{split_80_10_10, DatasetSplit, ParityExample};

/// Networks for this task read bit ids {0, 1} and emit two class logits, so
/// the shared token space has two ids and pad reuses id 0.
pub const PARITY_VOCAB: usize = 2;
pub const PARITY_CLASSES: usize = 2;

#[derive(Debug, Clone)]
pub struct ParityConfig {
    pub n: usize,
    pub len_range: (usize, usize),
}

impl Default for ParityConfig {
    fn default() -> Self {
        Self {
            n: 100_000,
            len_range: (2, 50),
        }
    }
}

/// Label is 1 exactly when the bitstring holds an even number of ones, so the
/// empty count of "00" is even and "1" is odd.
pub fn parity_label(bits: &[u8]) -> u8 {
    let ones: usize = bits.iter().map(|&b| b as usize).sum();
    u8::from(ones % 2 == 0)
}

/// Generate uniform random bitstrings with uniform lengths, split 80/10/10.
pub fn gen_parity(config: &ParityConfig, seed: u64) -> Result<DatasetSplit<ParityExample>> {
    let (lo, hi) = config.len_range;
    if config.n == 0 {
        return Err(TaskError::InvalidConfig("need at least one example".into()));
    }
    if lo == 0 || lo > hi {
        return Err(TaskError::InfeasibleLengths { lo, hi });
    }
    let mut rng = RngState::new(seed);
    let mut items = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let len = rng.next_range_inclusive(lo, hi);
        let bits: Vec<u8> = (0..len).map(|_| rng.next_below(2) as u8).collect();
        let label = parity_label(&bits);
        items.push(ParityExample { bits, label });
    }
    Ok(split_80_10_10(items, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(parity_label(&[0, 1, 1, 0]), 1);
        assert_eq!(parity_label(&[1]), 0);
        assert_eq!(parity_label(&[0, 0]), 1);
    }
}
