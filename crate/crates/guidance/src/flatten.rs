use guidelab_metrics::{ActivationMatrix, NetworkTag};
use guidelab_tensor::{Element, Tensor};

use crate::error::{GuidanceError, Result};

/// Flatten a raw tap activation into the b×d sample matrix the
/// representational metrics consume. Conv activations (b,C,H,W) become
/// b×(C·H·W); sequence activations (b,T,d) become b×(T·d) with padded
/// positions zeroed through `pad_mask` so padding never contributes to
/// similarity; 2-D activations pass through. Differentiable: gradients flow
/// back into the raw activation (scaled by the 0/1 mask where one applies).
pub fn flatten_activation<T: Element>(
    raw: &Tensor<T>,
    pad_mask: Option<&[bool]>,
    layer_name: &str,
    tag: NetworkTag,
) -> Result<ActivationMatrix<T>> {
    let shape = raw.shape();
    let flat = match shape.len() {
        2 => {
            if let Some(m) = pad_mask {
                return Err(GuidanceError::MaskShape {
                    expect: 0,
                    got: m.len(),
                });
            }
            raw.clone()
        }
        3 => {
            let (b, t, d) = (shape[0], shape[1], shape[2]);
            let masked = match pad_mask {
                Some(m) => {
                    if m.len() != b * t {
                        return Err(GuidanceError::MaskShape {
                            expect: b * t,
                            got: m.len(),
                        });
                    }
                    let gate: Vec<T> = m
                        .iter()
                        .map(|&ok| if ok { T::one() } else { T::zero() })
                        .collect();
                    let gate = Tensor::new(&[b, t, 1], gate)?;
                    raw.mul(&gate)?
                }
                None => raw.clone(),
            };
            masked.reshape(&[b, t * d])?
        }
        4 => {
            if let Some(m) = pad_mask {
                return Err(GuidanceError::MaskShape {
                    expect: 0,
                    got: m.len(),
                });
            }
            let b = shape[0];
            let rest: usize = shape[1..].iter().product();
            raw.reshape(&[b, rest])?
        }
        r => return Err(GuidanceError::UnsupportedRank(r)),
    };
    Ok(ActivationMatrix::new(flat, layer_name, tag)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_activations_flatten_per_sample() {
        let x = Tensor::<f64>::new(&[2, 3, 4, 4], (0..96).map(|v| v as f64).collect()).unwrap();
        let m = flatten_activation(&x, None, "conv", NetworkTag::Guide).unwrap();
        assert_eq!(m.values().shape(), &[2, 48]);
        assert_eq!(m.values().to_vec(), x.to_vec(), "row-major passthrough");
    }

    #[test]
    fn sequence_activations_zero_padded_positions() {
        let x = Tensor::<f64>::new(&[2, 3, 2], (1..=12).map(|v| v as f64).collect()).unwrap();
        let mask = vec![true, true, false, true, false, false];
        let m = flatten_activation(&x, Some(&mask), "layer01", NetworkTag::Target).unwrap();
        assert_eq!(m.values().shape(), &[2, 6]);
        assert_eq!(
            m.values().to_vec(),
            vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 7.0, 8.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn two_d_activations_pass_through() {
        let x = Tensor::<f64>::new(&[16, 32], vec![0.5; 512]).unwrap();
        let m = flatten_activation(&x, None, "fc", NetworkTag::Target).unwrap();
        assert_eq!(m.values().shape(), &[16, 32]);
    }

    #[test]
    fn mask_shape_must_match() {
        let x = Tensor::<f64>::new(&[2, 3, 2], vec![0.1; 12]).unwrap();
        let err = flatten_activation(&x, Some(&[true; 5]), "l", NetworkTag::Target).unwrap_err();
        assert!(matches!(err, GuidanceError::MaskShape { expect: 6, got: 5 }));
    }

    #[test]
    fn masks_are_rejected_for_non_sequence_ranks() {
        let x = Tensor::<f64>::new(&[4, 4], vec![0.2; 16]).unwrap();
        assert!(flatten_activation(&x, Some(&[true; 16]), "l", NetworkTag::Target).is_err());
    }

    #[test]
    fn scalars_cannot_be_flattened() {
        let x = Tensor::<f64>::scalar(1.0).unwrap();
        assert!(matches!(
            flatten_activation(&x, None, "s", NetworkTag::Target),
            Err(GuidanceError::UnsupportedRank(0))
        ));
    }
}
