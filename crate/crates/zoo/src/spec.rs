use serde::{Deserialize, Serialize};

use crate::error::{Result, ZooError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fcn,
    PlainCnn,
    ResCnn,
    RnnStack,
    TransformerEncoder,
    TransformerDecoder,
    PatchVit,
}

impl Family {
    /// Families whose input is a (b,C,H,W) image tensor (the fcn also accepts
    /// pre-flattened (b,D) input).
    pub fn is_image(self) -> bool {
        matches!(
            self,
            Family::Fcn | Family::PlainCnn | Family::ResCnn | Family::PatchVit
        )
    }

    /// Families whose input is a (b,T) grid of token ids.
    pub fn is_sequence(self) -> bool {
        matches!(
            self,
            Family::RnnStack | Family::TransformerEncoder | Family::TransformerDecoder
        )
    }

    pub fn is_cnn(self) -> bool {
        matches!(self, Family::PlainCnn | Family::ResCnn)
    }

    /// Families with multi-head attention layers.
    pub fn has_attention(self) -> bool {
        matches!(
            self,
            Family::TransformerEncoder | Family::TransformerDecoder | Family::PatchVit
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

fn default_activation() -> Activation {
    Activation::Relu
}

/// Declarative description of one network. Serialized verbatim into config
/// files and checkpoint metadata, so field names are part of the on-disk
/// contract. `classes` doubles as the vocabulary size for token families
/// (input ids and output logits share one id space) and accepts the key
/// `vocab` as an alias when deserializing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub family: Family,
    /// Number of blocks (fcn/cnn) or stacked layers (rnn/transformer/vit).
    pub depth: usize,
    /// Hidden units per layer; embedding dimension for token families.
    pub width: usize,
    /// Attention heads; required iff the family has attention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    /// Skip connections; may only appear on cnn families, where it must agree
    /// with the family name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<bool>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    /// Output size: class count for image families, vocabulary size for
    /// token families.
    #[serde(alias = "vocab")]
    pub classes: usize,
    /// Maximum sequence length; required iff the family is a sequence family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_len: Option<usize>,
    /// Square patch edge length; required iff family == patch_vit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_size: Option<usize>,
    /// Input shape excluding the batch axis: [C,H,W] for image input, or a
    /// single [D] for fcn on pre-flattened vectors. Empty for token families.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_shape: Vec<usize>,
}

impl NetworkSpec {
    pub fn fcn(depth: usize, width: usize, input_shape: &[usize], classes: usize) -> Self {
        NetworkSpec {
            family: Family::Fcn,
            depth,
            width,
            heads: None,
            residual: None,
            activation: Activation::Relu,
            classes,
            context_len: None,
            patch_size: None,
            input_shape: input_shape.to_vec(),
        }
    }

    pub fn cnn(
        depth: usize,
        width: usize,
        input_shape: [usize; 3],
        classes: usize,
        residual: bool,
    ) -> Self {
        NetworkSpec {
            family: if residual {
                Family::ResCnn
            } else {
                Family::PlainCnn
            },
            depth,
            width,
            heads: None,
            residual: Some(residual),
            activation: Activation::Relu,
            classes,
            context_len: None,
            patch_size: None,
            input_shape: input_shape.to_vec(),
        }
    }

    pub fn rnn(depth: usize, width: usize, vocab: usize, context_len: usize) -> Self {
        NetworkSpec {
            family: Family::RnnStack,
            depth,
            width,
            heads: None,
            residual: None,
            activation: Activation::Tanh,
            classes: vocab,
            context_len: Some(context_len),
            patch_size: None,
            input_shape: Vec::new(),
        }
    }

    pub fn transformer(
        family: Family,
        depth: usize,
        width: usize,
        heads: usize,
        vocab: usize,
        context_len: usize,
    ) -> Self {
        assert!(
            matches!(
                family,
                Family::TransformerEncoder | Family::TransformerDecoder
            ),
            "transformer constructor requires a transformer family"
        );
        NetworkSpec {
            family,
            depth,
            width,
            heads: Some(heads),
            residual: None,
            activation: Activation::Relu,
            classes: vocab,
            context_len: Some(context_len),
            patch_size: None,
            input_shape: Vec::new(),
        }
    }

    pub fn vit(
        depth: usize,
        width: usize,
        heads: usize,
        patch_size: usize,
        input_shape: [usize; 3],
        classes: usize,
    ) -> Self {
        NetworkSpec {
            family: Family::PatchVit,
            depth,
            width,
            heads: Some(heads),
            residual: None,
            activation: Activation::Relu,
            classes,
            context_len: None,
            patch_size: Some(patch_size),
            input_shape: input_shape.to_vec(),
        }
    }

    /// Flattened input dimensionality for image families.
    pub fn in_dim(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(ZooError::InvalidSpec(msg));
        if self.depth < 1 {
            return fail("depth must be at least 1".into());
        }
        if self.width < 1 {
            return fail("width must be at least 1".into());
        }
        if self.classes < 1 {
            return fail("classes must be at least 1".into());
        }
        match self.residual {
            Some(flag) if !self.family.is_cnn() => {
                return fail(format!(
                    "residual={flag} only applies to cnn families, not {:?}",
                    self.family
                ));
            }
            Some(true) if self.family == Family::PlainCnn => {
                return fail("family plain_cnn conflicts with residual=true".into());
            }
            Some(false) if self.family == Family::ResCnn => {
                return fail("family res_cnn conflicts with residual=false".into());
            }
            _ => {}
        }
        match self.heads {
            Some(h) if self.family.has_attention() => {
                if h < 1 {
                    return fail("heads must be at least 1".into());
                }
                if self.width % h != 0 {
                    return fail(format!("heads must divide width ({h} does not divide {})", self.width));
                }
            }
            Some(_) => {
                return fail(format!("heads does not apply to {:?}", self.family));
            }
            None if self.family.has_attention() => {
                return fail(format!("{:?} requires heads", self.family));
            }
            None => {}
        }
        match self.context_len {
            Some(c) if self.family.is_sequence() => {
                if c < 2 {
                    return fail(format!("context_len must be at least 2, got {c}"));
                }
            }
            Some(_) => {
                return fail(format!("context_len does not apply to {:?}", self.family));
            }
            None if self.family.is_sequence() => {
                return fail(format!("{:?} requires context_len", self.family));
            }
            None => {}
        }
        if self.family.is_image() {
            let rank_ok = match self.family {
                Family::Fcn => self.input_shape.len() == 1 || self.input_shape.len() == 3,
                _ => self.input_shape.len() == 3,
            };
            if !rank_ok {
                return fail(format!(
                    "{:?} requires input_shape [C,H,W]{}, got {:?}",
                    self.family,
                    if self.family == Family::Fcn { " or [D]" } else { "" },
                    self.input_shape
                ));
            }
            if self.input_shape.iter().any(|&d| d == 0) {
                return fail(format!("input_shape has a zero dim: {:?}", self.input_shape));
            }
        } else if !self.input_shape.is_empty() {
            return fail(format!("input_shape does not apply to {:?}", self.family));
        }
        match self.patch_size {
            Some(p) if self.family == Family::PatchVit => {
                if p < 1 {
                    return fail("patch_size must be at least 1".into());
                }
                let (h, w) = (self.input_shape[1], self.input_shape[2]);
                if h % p != 0 || w % p != 0 {
                    return fail(format!("patch_size {p} must divide image height {h} and width {w}"));
                }
            }
            Some(_) => {
                return fail(format!("patch_size does not apply to {:?}", self.family));
            }
            None if self.family == Family::PatchVit => {
                return fail("patch_vit requires patch_size".into());
            }
            None => {}
        }
        Ok(())
    }

    /// Patch grid size for patch_vit (number of tokens after patch embedding).
    pub fn patch_count(&self) -> usize {
        let p = self.patch_size.expect("patch_count is vit-only");
        (self.input_shape[1] / p) * (self.input_shape[2] / p)
    }
}
