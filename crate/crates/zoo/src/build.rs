use std::collections::BTreeMap;

use guidelab_tensor::{Element, RngState, Tensor};

use crate::error::Result;
use crate::families;
use crate::spec::{Family, NetworkSpec};
use crate::state::NetworkState;

/// Accumulates parameters, buffers, and tap names while a family module lays
/// out its network. Registration order is the forward execution order, which
/// fixes both the RNG draw order at init and the tap order.
pub(crate) struct LayoutBuilder<'a, T: Element> {
    rng: &'a mut RngState,
    params: BTreeMap<String, Tensor<T>>,
    buffers: BTreeMap<String, Tensor<T>>,
    taps: Vec<String>,
}

impl<'a, T: Element> LayoutBuilder<'a, T> {
    fn new(rng: &'a mut RngState) -> Self {
        LayoutBuilder {
            rng,
            params: BTreeMap::new(),
            buffers: BTreeMap::new(),
            taps: Vec::new(),
        }
    }

    fn insert_param(&mut self, name: &str, t: Tensor<T>) {
        let prior = self.params.insert(name.to_string(), t);
        assert!(prior.is_none(), "duplicate parameter name {name:?}");
    }

    /// Weight drawn uniformly from ±sqrt(1/fan_in). For lookup tables
    /// (token and position embeddings) callers pass the embedding width as
    /// the fan-in, since their rows feed the network at that scale.
    pub(crate) fn weight(&mut self, name: &str, shape: &[usize], fan_in: usize) -> Result<()> {
        let bound = (1.0 / fan_in as f64).sqrt();
        let t = self.rng.rand_uniform::<T>(shape, -bound, bound)?;
        let t = Tensor::param(t.shape(), t.to_vec())?;
        self.insert_param(name, t);
        Ok(())
    }

    pub(crate) fn zeros(&mut self, name: &str, shape: &[usize]) -> Result<()> {
        let t = Tensor::param(shape, vec![T::zero(); shape.iter().product()])?;
        self.insert_param(name, t);
        Ok(())
    }

    /// Affine norm parameters: gamma ones, beta zeros.
    fn norm_affine(&mut self, prefix: &str, nf: usize) -> Result<()> {
        let gamma = Tensor::param(&[nf], vec![T::one(); nf])?;
        let beta = Tensor::param(&[nf], vec![T::zero(); nf])?;
        self.insert_param(&format!("{prefix}.gamma"), gamma);
        self.insert_param(&format!("{prefix}.beta"), beta);
        Ok(())
    }

    /// Batch-norm site: affine parameters plus running mean/var buffers.
    pub(crate) fn batch_norm_site(&mut self, prefix: &str, nf: usize) -> Result<()> {
        self.norm_affine(prefix, nf)?;
        self.buffers.insert(
            format!("{prefix}.running_mean"),
            Tensor::new(&[nf], vec![T::zero(); nf])?,
        );
        self.buffers.insert(
            format!("{prefix}.running_var"),
            Tensor::new(&[nf], vec![T::one(); nf])?,
        );
        Ok(())
    }

    /// Layer-norm site: affine parameters only.
    pub(crate) fn layer_norm_site(&mut self, prefix: &str, nf: usize) -> Result<()> {
        self.norm_affine(prefix, nf)
    }

    pub(crate) fn tap(&mut self, name: &str) {
        self.taps.push(name.to_string());
    }
}

/// Build a network from its spec: validate, lay out parameters with the
/// fan-in uniform init (weights ±sqrt(1/fan_in), biases zero, norm affine
/// gamma=1/beta=0), and fix the tap list. Same spec and rng state always
/// produce bit-identical parameters.
pub fn build_network<T: Element>(spec: &NetworkSpec, rng: &mut RngState) -> Result<NetworkState<T>> {
    spec.validate()?;
    let mut lb = LayoutBuilder::new(rng);
    match spec.family {
        Family::Fcn => families::fcn::layout(spec, &mut lb)?,
        Family::PlainCnn | Family::ResCnn => families::cnn::layout(spec, &mut lb)?,
        Family::RnnStack => families::rnn::layout(spec, &mut lb)?,
        Family::TransformerEncoder | Family::TransformerDecoder => {
            families::transformer::layout(spec, &mut lb)?
        }
        Family::PatchVit => families::vit::layout(spec, &mut lb)?,
    }
    Ok(NetworkState::from_parts(
        spec.clone(),
        lb.params,
        lb.buffers,
        lb.taps,
    ))
}
