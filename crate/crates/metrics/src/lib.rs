//! Differentiable representational similarity metrics over minibatch
//! activations: linear CKA (Gram matrices, centering, HSIC) and RSA
//! (cosine-distance RDMs compared by Pearson correlation).
//!
//! Conventions: similarity 1 means identical representations; dissimilarity
//! is 1 minus similarity. Degenerate inputs (constant representations,
//! zero-norm rows) raise errors instead of returning NaN, because these
//! values feed straight into training losses.

mod cka;
mod error;
mod rsa;

pub use cka::{center_gram, cka_dissimilarity, gram, hsic, linear_cka};
pub use error::{MetricError, Result};
pub use rsa::{rdm_cosine, rsa_dissimilarity, rsa_similarity};

use guidelab_tensor::{Element, Tensor};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NetworkTag {
    Target,
    Guide,
}

/// A minibatch of flattened layer activations: b samples by d features.
#[derive(Debug, Clone)]
pub struct ActivationMatrix<T: Element> {
    values: Tensor<T>,
    layer_name: String,
    tag: NetworkTag,
}

impl<T: Element> ActivationMatrix<T> {
    pub fn new(
        values: Tensor<T>,
        layer_name: impl Into<String>,
        tag: NetworkTag,
    ) -> Result<Self> {
        if values.rank() != 2 {
            return Err(MetricError::BadShape {
                shape: values.shape().to_vec(),
            });
        }
        let b = values.shape()[0];
        let d = values.shape()[1];
        if b < 2 || d < 1 {
            return Err(MetricError::DegenerateBatch { min: 2, got: b });
        }
        Ok(Self {
            values,
            layer_name: layer_name.into(),
            tag,
        })
    }

    pub fn batch(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &Tensor<T> {
        &self.values
    }

    pub fn layer_name(&self) -> &str {
        &self.layer_name
    }

    pub fn tag(&self) -> NetworkTag {
        self.tag
    }
}

/// b-by-b Gram matrix with a flag tracking whether it has been centered.
#[derive(Debug, Clone)]
pub struct GramMatrix<T: Element> {
    values: Tensor<T>,
    centered: bool,
}

impl<T: Element> GramMatrix<T> {
    /// Wraps an uncentered Gram matrix. Checks squareness and symmetry;
    /// positive semidefiniteness is the caller's contract.
    pub fn from_values(values: Tensor<T>) -> Result<Self> {
        if values.rank() != 2 || values.shape()[0] != values.shape()[1] {
            return Err(MetricError::BadShape {
                shape: values.shape().to_vec(),
            });
        }
        let b = values.shape()[0];
        let tol = T::from_f64(1e-6);
        values.with_data(|d| {
            for i in 0..b {
                for j in 0..i {
                    if (d[i * b + j] - d[j * b + i]).abs() > tol {
                        return Err(MetricError::BadShape {
                            shape: values.shape().to_vec(),
                        });
                    }
                }
            }
            Ok(())
        })?;
        Ok(Self {
            values,
            centered: false,
        })
    }

    pub(crate) fn new_unchecked(values: Tensor<T>, centered: bool) -> Self {
        Self { values, centered }
    }

    pub fn batch(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn values(&self) -> &Tensor<T> {
        &self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }
}

/// Representational dissimilarity matrix: pairwise cosine distances.
#[derive(Debug, Clone)]
pub struct RDMatrix<T: Element> {
    values: Tensor<T>,
    layer_name: String,
}

impl<T: Element> RDMatrix<T> {
    pub(crate) fn new_unchecked(values: Tensor<T>, layer_name: String) -> Self {
        Self { values, layer_name }
    }

    pub fn batch(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn values(&self) -> &Tensor<T> {
        &self.values
    }

    pub fn layer_name(&self) -> &str {
        &self.layer_name
    }
}
