use guidelab_tasks::{
    build_lm_dataset, collate_images, collate_parity, collate_sequences, copy_paste_vocab,
    gen_copy_paste, gen_images, gen_parity, load_image_dataset, CopyPasteConfig, DatasetSplit,
    ImageExample, ParityConfig, SequenceExample, SplitName, TaskKind, BYTE_PAD_ID, BYTE_VOCAB,
    PAD_ID, PARITY_VOCAB,
};
use guidelab_tensor::Tensor;
use guidelab_zoo::{Batch, Family, NetworkSpec};

use crate::config::TaskConfig;
use crate::error::{HarnessError, Result};

/// A dataset materialized in memory, shared read-only across seeds.
pub enum TaskData {
    Sequence {
        split: DatasetSplit<SequenceExample>,
        task: TaskKind,
        pad_id: usize,
        vocab: usize,
    },
    Parity {
        split: DatasetSplit<ParityExample>,
    },
    Images {
        split: DatasetSplit<ImageExample>,
        classes: usize,
    },
}

use guidelab_tasks::ParityExample;

/// One batch ready for a forward pass: the network input plus flattened
/// targets (one per position for sequences, one per example for images).
pub struct PreparedBatch {
    pub batch: Batch<f32>,
    pub targets: Vec<i64>,
    pub rows: usize,
    pub positions: usize,
}

impl TaskData {
    pub fn load(cfg: &TaskConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg {
            TaskConfig::CopyPaste {
                n,
                len_range,
                vocab_size,
                data_seed,
            } => {
                let gen_cfg = CopyPasteConfig {
                    n: *n,
                    len_range: *len_range,
                    vocab_size: *vocab_size,
                };
                TaskData::Sequence {
                    split: gen_copy_paste(&gen_cfg, *data_seed)?,
                    task: TaskKind::CopyPaste,
                    pad_id: PAD_ID,
                    vocab: copy_paste_vocab(*vocab_size),
                }
            }
            TaskConfig::Parity {
                n,
                len_range,
                data_seed,
            } => {
                let gen_cfg = ParityConfig {
                    n: *n,
                    len_range: *len_range,
                };
                TaskData::Parity {
                    split: gen_parity(&gen_cfg, *data_seed)?,
                }
            }
            TaskConfig::LanguageModel {
                corpus,
                context_len,
                data_seed,
            } => TaskData::Sequence {
                split: build_lm_dataset(corpus, *context_len, *data_seed)?,
                task: TaskKind::LanguageModel,
                pad_id: BYTE_PAD_ID,
                vocab: BYTE_VOCAB,
            },
            TaskConfig::Images {
                synth,
                path,
                data_seed,
            } => {
                let split = match (synth, path) {
                    (Some(spec), None) => gen_images(spec, *data_seed)?,
                    (None, Some(p)) => load_image_dataset(p, *data_seed)?,
                    _ => unreachable!("validated: exactly one source"),
                };
                let classes = match synth {
                    Some(spec) => spec.classes,
                    None => {
                        1 + split
                            .train
                            .iter()
                            .chain(&split.val)
                            .chain(&split.test)
                            .map(|ex| ex.label)
                            .max()
                            .unwrap_or(0)
                    }
                };
                TaskData::Images { split, classes }
            }
        })
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            TaskData::Sequence { task, .. } => *task,
            TaskData::Parity { .. } => TaskKind::Parity,
            TaskData::Images { .. } => TaskKind::Images,
        }
    }

    pub fn manifest(&self) -> &str {
        match self {
            TaskData::Sequence { split, .. } => &split.manifest,
            TaskData::Parity { split } => &split.manifest,
            TaskData::Images { split, .. } => &split.manifest,
        }
    }

    pub fn len(&self, name: SplitName) -> usize {
        match self {
            TaskData::Sequence { split, .. } => split.split(name).len(),
            TaskData::Parity { split } => split.split(name).len(),
            TaskData::Images { split, .. } => split.split(name).len(),
        }
    }

    pub fn is_empty(&self, name: SplitName) -> bool {
        self.len(name) == 0
    }

    /// Token id space a network on this task must cover; images have none.
    pub fn vocab(&self) -> Option<usize> {
        match self {
            TaskData::Sequence { vocab, .. } => Some(*vocab),
            TaskData::Parity { .. } => Some(PARITY_VOCAB),
            TaskData::Images { .. } => None,
        }
    }

    /// Output dimension required of the network head.
    pub fn classes(&self) -> usize {
        match self {
            TaskData::Sequence { vocab, .. } => *vocab,
            TaskData::Parity { .. } => PARITY_VOCAB,
            TaskData::Images { classes, .. } => *classes,
        }
    }

    fn max_example_len(&self) -> usize {
        match self {
            TaskData::Sequence { split, .. } => split
                .train
                .iter()
                .chain(&split.val)
                .chain(&split.test)
                .map(|ex| ex.len())
                .max()
                .unwrap_or(0),
            TaskData::Parity { split } => split
                .train
                .iter()
                .chain(&split.val)
                .chain(&split.test)
                .map(|ex| ex.bits.len())
                .max()
                .unwrap_or(0),
            TaskData::Images { .. } => 0,
        }
    }

    fn image_shape(&self) -> Option<[usize; 3]> {
        match self {
            TaskData::Images { split, .. } => {
                let first = split.train.first().or(split.val.first())?;
                Some([first.channels, first.height, first.width])
            }
            _ => None,
        }
    }

    /// Reject networks that cannot consume this dataset: wrong input family,
    /// wrong head size, too short a context, or mismatched image shape.
    pub fn check_spec(&self, spec: &NetworkSpec, role: &str) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(format!("{role}: {msg}")));
        match self {
            TaskData::Sequence { .. } | TaskData::Parity { .. } => {
                if !spec.family.is_sequence() {
                    return fail(format!(
                        "{:?} cannot read token sequences; use a sequence family",
                        spec.family
                    ));
                }
                let vocab = self.vocab().expect("sequence task has a vocab");
                if spec.classes != vocab {
                    return fail(format!(
                        "vocab is {} but the spec declares {}",
                        vocab, spec.classes
                    ));
                }
                let need = self.max_example_len();
                let ctx = spec.context_len.unwrap_or(0);
                if ctx < need {
                    return fail(format!(
                        "context_len {ctx} is shorter than the longest example ({need})"
                    ));
                }
            }
            TaskData::Images { .. } => {
                if !spec.family.is_image() {
                    return fail(format!(
                        "{:?} cannot read images; use an image family",
                        spec.family
                    ));
                }
                let [c, h, w] = self.image_shape().ok_or(HarnessError::EmptySplit("train"))?;
                if spec.family == Family::Fcn {
                    if spec.in_dim() != c * h * w {
                        return fail(format!(
                            "fcn input dimension {} does not match {c}x{h}x{w} images",
                            spec.in_dim()
                        ));
                    }
                } else if spec.input_shape != [c, h, w] {
                    return fail(format!(
                        "input_shape {:?} does not match {c}x{h}x{w} images",
                        spec.input_shape
                    ));
                }
                if spec.classes != self.classes() {
                    return fail(format!(
                        "dataset has {} classes but the spec declares {}",
                        self.classes(),
                        spec.classes
                    ));
                }
            }
        }
        Ok(())
    }

    /// Guide-side compatibility is looser than the target's: the guide's
    /// head never meets the task targets, so its class count only has to
    /// cover the input id space (token ids index its embedding). Everything
    /// else matches the target checks.
    pub fn check_guide_spec(&self, spec: &NetworkSpec) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(format!("guide: {msg}")));
        match self {
            TaskData::Sequence { .. } | TaskData::Parity { .. } => {
                if !spec.family.is_sequence() {
                    return fail(format!(
                        "{:?} cannot read token sequences; use a sequence family",
                        spec.family
                    ));
                }
                let vocab = self.vocab().expect("sequence task has a vocab");
                if spec.classes < vocab {
                    return fail(format!(
                        "embedding covers {} ids but inputs use {}",
                        spec.classes, vocab
                    ));
                }
                let need = self.max_example_len();
                let ctx = spec.context_len.unwrap_or(0);
                if ctx < need {
                    return fail(format!(
                        "context_len {ctx} is shorter than the longest example ({need})"
                    ));
                }
            }
            TaskData::Images { .. } => {
                if !spec.family.is_image() {
                    return fail(format!(
                        "{:?} cannot read images; use an image family",
                        spec.family
                    ));
                }
                let [c, h, w] = self.image_shape().ok_or(HarnessError::EmptySplit("train"))?;
                if spec.family == Family::Fcn {
                    if spec.in_dim() != c * h * w {
                        return fail(format!(
                            "fcn input dimension {} does not match {c}x{h}x{w} images",
                            spec.in_dim()
                        ));
                    }
                } else if spec.input_shape != [c, h, w] {
                    return fail(format!(
                        "input_shape {:?} does not match {c}x{h}x{w} images",
                        spec.input_shape
                    ));
                }
            }
        }
        Ok(())
    }

    /// Assemble the network input and targets for the given example indices.
    pub fn make_batch(
        &self,
        name: SplitName,
        idx: &[usize],
        batch_id: u64,
    ) -> Result<PreparedBatch> {
        match self {
            TaskData::Sequence { split, pad_id, .. } => {
                let data = collate_sequences(split.split(name), idx, *pad_id)?;
                let batch = match self.kind() {
                    // Copy-paste pads to ragged lengths; the mask keeps
                    // padded keys out of encoder attention and out of the
                    // flattened guidance activations.
                    TaskKind::CopyPaste => Batch::tokens_masked(
                        batch_id,
                        data.ids,
                        data.batch,
                        data.len,
                        Some(data.mask),
                    )?,
                    _ => Batch::tokens(batch_id, data.ids, data.batch, data.len)?,
                };
                Ok(PreparedBatch {
                    batch,
                    targets: data.targets,
                    rows: data.batch,
                    positions: data.len,
                })
            }
            TaskData::Parity { split } => {
                let data = collate_parity(split.split(name), idx)?;
                let batch = Batch::tokens_masked(
                    batch_id,
                    data.ids,
                    data.batch,
                    data.len,
                    Some(data.mask),
                )?;
                Ok(PreparedBatch {
                    batch,
                    targets: data.targets,
                    rows: data.batch,
                    positions: data.len,
                })
            }
            TaskData::Images { split, .. } => {
                let data = collate_images(split.split(name), idx)?;
                let shape = [data.batch, data.channels, data.height, data.width];
                let x = Tensor::new(&shape, data.pixels)?;
                Ok(PreparedBatch {
                    batch: Batch::images(batch_id, x),
                    targets: data.labels,
                    rows: data.batch,
                    positions: 1,
                })
            }
        }
    }
}
