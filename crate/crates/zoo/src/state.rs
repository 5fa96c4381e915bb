use std::collections::BTreeMap;

use guidelab_tensor::{Element, NormMode, Tensor};

use crate::batch::Batch;
use crate::error::{Result, ZooError};
use crate::families;
use crate::spec::{Family, NetworkSpec};

/// Forward-pass statistics policy. `Train` lets batch norms consume batch
/// statistics and fold them into the running buffers; `Eval` reads the
/// buffers; `FrozenBatch` consumes batch statistics without touching the
/// buffers, which is what a frozen never-trained network needs (its buffers
/// still sit at their init values and would normalize garbage).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
    FrozenBatch,
}

impl Mode {
    pub(crate) fn norm_mode(self) -> NormMode {
        match self {
            Mode::Train => NormMode::Train,
            Mode::Eval => NormMode::Eval,
            Mode::FrozenBatch => NormMode::FrozenBatch,
        }
    }
}

/// Ordered activations captured at every tap during one forward pass. Order
/// and names always equal the owning network's `tap_list`.
#[derive(Debug)]
pub struct ActivationRecord<T: Element> {
    batch_id: u64,
    pairs: Vec<(String, Tensor<T>)>,
}

impl<T: Element> ActivationRecord<T> {
    /// Normally produced by `forward_with_taps`; public so loss consumers
    /// can build synthetic records around hand-picked activations.
    pub fn new(batch_id: u64, pairs: Vec<(String, Tensor<T>)>) -> Self {
        ActivationRecord { batch_id, pairs }
    }

    pub fn batch_id(&self) -> u64 {
        self.batch_id
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, Tensor<T>)] {
        &self.pairs
    }

    /// Tap activation by position in the record (== position in tap_list).
    pub fn activation(&self, index: usize) -> &Tensor<T> {
        &self.pairs[index].1
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(n, _)| n.as_str())
    }
}

/// A built network: spec, named parameters, named non-trainable buffers
/// (batch-norm running statistics), the ordered tap list, and the forward
/// mode. Parameters live behind shared tensors; the optimizer updates them
/// in place, so this type is deliberately not `Clone` (a clone would alias
/// the parameters, not copy them).
#[derive(Debug)]
pub struct NetworkState<T: Element> {
    spec: NetworkSpec,
    params: BTreeMap<String, Tensor<T>>,
    buffers: BTreeMap<String, Tensor<T>>,
    tap_list: Vec<String>,
    mode: Mode,
}

impl<T: Element> NetworkState<T> {
    pub(crate) fn from_parts(
        spec: NetworkSpec,
        params: BTreeMap<String, Tensor<T>>,
        buffers: BTreeMap<String, Tensor<T>>,
        tap_list: Vec<String>,
    ) -> Self {
        NetworkState {
            spec,
            params,
            buffers,
            tap_list,
            mode: Mode::Train,
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Trainable parameters, keyed by stable names. Iteration order is the
    /// name order, which every consumer (optimizer, checkpoints, gradient
    /// clipping) relies on for reproducibility.
    pub fn params(&self) -> &BTreeMap<String, Tensor<T>> {
        &self.params
    }

    /// Non-trainable running statistics (empty for norm-free families).
    pub fn buffers(&self) -> &BTreeMap<String, Tensor<T>> {
        &self.buffers
    }

    /// Ordered tap names; forward records always match this list.
    pub fn tap_list(&self) -> &[String] {
        &self.tap_list
    }

    /// Total scalar parameter count (buffers excluded).
    pub fn count_params(&self) -> usize {
        self.params.values().map(|t| t.numel()).sum()
    }

    pub(crate) fn p(&self, name: &str) -> &Tensor<T> {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("network has no parameter {name:?}"))
    }

    pub(crate) fn buf(&self, name: &str) -> &Tensor<T> {
        self.buffers
            .get(name)
            .unwrap_or_else(|| panic!("network has no buffer {name:?}"))
    }

    /// Run the network on one batch, returning logits and the ordered
    /// activation record. Image families emit (b,classes); token families
    /// emit per-position logits (b,T,classes). In `Eval` and `FrozenBatch`
    /// modes the pass mutates nothing.
    pub fn forward_with_taps(&self, batch: &Batch<T>) -> Result<(Tensor<T>, ActivationRecord<T>)> {
        let (logits, pairs) = match self.spec.family {
            Family::Fcn => families::fcn::forward(self, batch)?,
            Family::PlainCnn | Family::ResCnn => families::cnn::forward(self, batch)?,
            Family::RnnStack => families::rnn::forward(self, batch)?,
            Family::TransformerEncoder | Family::TransformerDecoder => {
                families::transformer::forward(self, batch)?
            }
            Family::PatchVit => families::vit::forward(self, batch)?,
        };
        assert_eq!(
            pairs.len(),
            self.tap_list.len(),
            "forward produced {} taps but the tap list has {}",
            pairs.len(),
            self.tap_list.len()
        );
        for (pair, expect) in pairs.iter().zip(&self.tap_list) {
            assert_eq!(&pair.0, expect, "tap order diverged from tap_list");
        }
        Ok((logits, ActivationRecord::new(batch.id, pairs)))
    }

    /// All persistent tensors (parameters then buffers) as raw rows, for
    /// embedding in a checkpoint.
    pub fn export_tensors(&self) -> Vec<(String, Vec<usize>, Vec<T>)> {
        self.params
            .iter()
            .chain(self.buffers.iter())
            .map(|(name, t)| (name.clone(), t.shape().to_vec(), t.to_vec()))
            .collect()
    }

    /// Restore parameters and buffers from checkpoint rows. Every entry must
    /// name a tensor of this network and every tensor must be covered;
    /// anything else is a spec/checkpoint mismatch.
    pub fn import_tensors(&self, rows: &[(String, Vec<usize>, Vec<T>)]) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, shape, data) in rows {
            let slot = self
                .params
                .get(name)
                .or_else(|| self.buffers.get(name))
                .ok_or_else(|| ZooError::UnknownState(name.clone()))?;
            if slot.shape() != shape.as_slice() {
                return Err(ZooError::BatchMismatch(format!(
                    "state entry {name:?} has shape {shape:?}, expected {:?}",
                    slot.shape()
                )));
            }
            slot.set_data(data.clone())?;
            seen.insert(name.clone());
        }
        for name in self.params.keys().chain(self.buffers.keys()) {
            if !seen.contains(name) {
                return Err(ZooError::MissingState(name.clone()));
            }
        }
        Ok(())
    }
}
