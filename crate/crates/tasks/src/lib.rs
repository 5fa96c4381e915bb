//! Dataset generation, file formats, batching, and task metrics.
//!
//! Four task families share one pipeline: copy-paste and byte-level language
//! modelling produce [`SequenceExample`]s, parity produces labelled
//! bitstrings, and the image path reads or synthesizes labelled shape images.
//! Every generator takes a seed, splits 80/10/10, and stamps the result with
//! a SHA-256 manifest so reruns and file round-trips are checkable.
//!
//! Collators turn example slices into rectangular id/pixel blocks (padding
//! with in-band pad ids, ignore targets, and false mask bits) and the
//! [`EvalAccumulator`] streams logits into per-task summaries.

mod collate;
mod copy_paste;
mod error;
mod images;
mod io;
mod lm;
mod metrics;
mod parity;
mod types;

pub use collate::{
    batch_indices, collate_images, collate_parity, collate_sequences, ImageBatchData,
    TokenBatchData,
};
pub use copy_paste::{
    copy_paste_sep, copy_paste_vocab, gen_copy_paste, CopyPasteConfig, PAD_ID,
};
pub use error::{Result, TaskError};
pub use images::{
    gen_images, load_image_dataset, load_images, save_images, SynthImageSpec,
    IMAGE_FORMAT_VERSION, IMAGE_MAGIC, MAX_SHAPE_CLASSES,
};
pub use io::{load_parity, load_sequences, save_parity, save_sequences};
pub use lm::{
    build_lm_dataset, build_lm_dataset_from_bytes, BYTE_PAD_ID, BYTE_VOCAB, DEFAULT_CONTEXT_LEN,
};
pub use metrics::{EvalAccumulator, EvalSummary, TaskKind};
pub use parity::{gen_parity, parity_label, ParityConfig, PARITY_CLASSES, PARITY_VOCAB};
pub use types::{
    manifest_hash, CanonicalBytes, DatasetSplit, ImageExample, ParityExample, SequenceExample,
    SplitName, IGNORE_TARGET,
};
