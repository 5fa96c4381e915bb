use sha2::{Digest, Sha256};

use crate::error::{Result, TaskError};

/// Target id that excludes a position from the loss and from accuracy counts.
pub const IGNORE_TARGET: i64 = -1;

/// One token sequence paired with per-position targets.
///
/// All three vectors have the same length. Positions whose target is
/// [`IGNORE_TARGET`] contribute nothing to the loss; `pad_mask` is true at
/// every real position and only turns false when a batch collator appends
/// padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceExample {
    pub input_tokens: Vec<usize>,
    pub target_tokens: Vec<i64>,
    pub pad_mask: Vec<bool>,
}

impl SequenceExample {
    pub fn new(input_tokens: Vec<usize>, target_tokens: Vec<i64>) -> Result<Self> {
        if input_tokens.len() != target_tokens.len() {
            return Err(TaskError::SizeMismatch {
                what: "sequence targets",
                expect: input_tokens.len(),
                got: target_tokens.len(),
            });
        }
        let pad_mask = vec![true; input_tokens.len()];
        Ok(Self {
            input_tokens,
            target_tokens,
            pad_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.input_tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_tokens.is_empty()
    }
}

/// A bitstring labelled 1 when it contains an even number of ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityExample {
    pub bits: Vec<u8>,
    pub label: u8,
}

/// One image with pixels flattened channel-major in `[0, 1]`.
///
/// Pixel values are always exact multiples of 1/255 so that writing them back
/// to the byte-oriented file format is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageExample {
    pub pixels: Vec<f32>,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub label: usize,
}

/// A dataset cut into disjoint train/val/test portions.
///
/// `manifest` is a SHA-256 digest over the canonical byte form of every
/// example in split order; regenerating with the same seed, or saving and
/// reloading the files, reproduces the same digest.
#[derive(Debug, Clone)]
pub struct DatasetSplit<E> {
    pub train: Vec<E>,
    pub val: Vec<E>,
    pub test: Vec<E>,
    pub seed: u64,
    pub manifest: String,
}

impl<E> DatasetSplit<E> {
    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn split(&self, name: SplitName) -> &[E] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

/// Canonical byte rendering used for manifest hashing.
pub trait CanonicalBytes {
    fn write_canonical(&self, out: &mut Vec<u8>);
}

impl CanonicalBytes for SequenceExample {
    fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(crate::io::sequence_line(self).as_bytes());
        out.push(b'\n');
    }
}

impl CanonicalBytes for ParityExample {
    fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(crate::io::parity_line(self).as_bytes());
        out.push(b'\n');
    }
}

impl CanonicalBytes for ImageExample {
    fn write_canonical(&self, out: &mut Vec<u8>) {
        for &p in &self.pixels {
            out.push(crate::images::pixel_to_byte(p));
        }
        out.extend_from_slice(&(self.label as u16).to_le_bytes());
    }
}

/// Cut `items` into 80/10/10 portions in order, then hash the result.
///
/// Sizes are `floor(n * 8 / 10)` and `floor(n / 10)`, with the remainder going
/// to test, so n = 100000 gives 80000/10000/10000.
pub(crate) fn split_80_10_10<E: CanonicalBytes>(
    mut items: Vec<E>,
    seed: u64,
) -> DatasetSplit<E> {
    let n = items.len();
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test = items.split_off(n_train + n_val);
    let val = items.split_off(n_train);
    let train = items;
    let manifest = manifest_hash(&train, &val, &test);
    DatasetSplit {
        train,
        val,
        test,
        seed,
        manifest,
    }
}

/// SHA-256 over split headers and canonical example bytes.
pub fn manifest_hash<E: CanonicalBytes>(train: &[E], val: &[E], test: &[E]) -> String {
    let mut hasher = Sha256::new();
    for (name, part) in [("train", train), ("val", val), ("test", test)] {
        hasher.update(name.as_bytes());
        hasher.update((part.len() as u64).to_le_bytes());
        let mut buf = Vec::new();
        for ex in part {
            ex.write_canonical(&mut buf);
        }
        hasher.update(&buf);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}
