use guidelab_tensor::{Element, Tensor};

use crate::error::{MetricError, Result};
use crate::{ActivationMatrix, GramMatrix};

/// K = R R^T (uncentered).
pub fn gram<T: Element>(r: &ActivationMatrix<T>) -> Result<GramMatrix<T>> {
    let k = r.values().matmul(&r.values().transpose()?)?;
    Ok(GramMatrix::new_unchecked(k, false))
}

/// K~ = H K H with H = I - (1/b) 11^T. Centering an already-centered matrix
/// is a contract violation (it would silently hide a double-centering bug),
/// even though the operation is mathematically idempotent.
pub fn center_gram<T: Element>(k: &GramMatrix<T>) -> Result<GramMatrix<T>> {
    if k.is_centered() {
        return Err(MetricError::AlreadyCentered);
    }
    let b = k.batch();
    let mut h = vec![-T::one() / T::from_f64(b as f64); b * b];
    for i in 0..b {
        h[i * b + i] += T::one();
    }
    let h = Tensor::new(&[b, b], h)?;
    let centered = h.matmul(k.values())?.matmul(&h)?;
    Ok(GramMatrix::new_unchecked(centered, true))
}

/// tr(K~ L~), computed as the elementwise product sum (valid because both
/// matrices are symmetric).
pub fn hsic<T: Element>(kc: &GramMatrix<T>, lc: &GramMatrix<T>) -> Result<Tensor<T>> {
    if !kc.is_centered() || !lc.is_centered() {
        return Err(MetricError::NotCentered);
    }
    if kc.batch() != lc.batch() {
        return Err(MetricError::SizeMismatch {
            lhs: kc.batch(),
            rhs: lc.batch(),
        });
    }
    Ok(kc.values().mul(lc.values())?.sum_all()?)
}

/// Squared Frobenius norm of the raw (graph-free) values, used to scale the
/// degeneracy threshold.
fn fro2<T: Element>(t: &Tensor<T>) -> f64 {
    t.with_data(|d| d.iter().map(|&x| x.to_f64_e() * x.to_f64_e()).sum())
}

fn self_hsic<T: Element>(r: &ActivationMatrix<T>) -> Result<(GramMatrix<T>, Tensor<T>)> {
    let kc = center_gram(&gram(r)?)?;
    let xx = hsic(&kc, &kc)?;
    // a constant representation centers to (numerically) zero; its self-HSIC
    // collapses below anything a real signal can produce
    let floor = fro2(kc.values()).max(T::epsilon().to_f64_e());
    if xx.item()?.to_f64_e() <= floor * T::epsilon().to_f64_e() {
        return Err(MetricError::DegenerateRepresentation {
            layer: r.layer_name().to_string(),
        });
    }
    Ok((kc, xx))
}

/// Linear CKA in [0,1]: HSIC(K~,L~) / sqrt(HSIC(K~,K~) HSIC(L~,L~)).
/// Differentiable w.r.t. both activation matrices.
pub fn linear_cka<T: Element>(
    r: &ActivationMatrix<T>,
    r2: &ActivationMatrix<T>,
) -> Result<Tensor<T>> {
    if r.batch() != r2.batch() {
        return Err(MetricError::SizeMismatch {
            lhs: r.batch(),
            rhs: r2.batch(),
        });
    }
    let (kc, xx) = self_hsic(r)?;
    let (lc, yy) = self_hsic(r2)?;
    let xy = hsic(&kc, &lc)?;
    Ok(xy.div(&xx.mul(&yy)?.sqrt_elem()?)?)
}

/// 1 - linear CKA: zero for identical representations.
pub fn cka_dissimilarity<T: Element>(
    r: &ActivationMatrix<T>,
    r2: &ActivationMatrix<T>,
) -> Result<Tensor<T>> {
    let cka = linear_cka(r, r2)?;
    Ok(cka.neg()?.add_scalar(T::one())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NetworkTag;

    fn act(shape: &[usize], data: Vec<f64>) -> ActivationMatrix<f64> {
        let t = Tensor::new(shape, data).unwrap();
        ActivationMatrix::new(t, "test", NetworkTag::Target).unwrap()
    }

    #[test]
    fn gram_of_identity_rows() {
        let r = act(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let k = gram(&r).unwrap();
        assert_eq!(k.values().to_vec(), vec![1.0, 0.0, 0.0, 1.0]);
        assert!(!k.is_centered());
    }

    #[test]
    fn gram_hand_example() {
        let r = act(&[3, 2], vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let k = gram(&r).unwrap();
        assert_eq!(
            k.values().to_vec(),
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn centering_annihilates_constants() {
        let k =
            GramMatrix::from_values(Tensor::<f64>::new(&[3, 3], vec![1.0; 9]).unwrap()).unwrap();
        let kc = center_gram(&k).unwrap();
        for v in kc.values().to_vec() {
            assert!(v.abs() < 1e-12);
        }
        assert!(kc.is_centered());
    }

    #[test]
    fn double_centering_rejected() {
        let k = GramMatrix::from_values(Tensor::new(&[2, 2], vec![2.0, 1.0, 1.0, 2.0]).unwrap())
            .unwrap();
        let kc = center_gram(&k).unwrap();
        assert!(matches!(
            center_gram(&kc).unwrap_err(),
            MetricError::AlreadyCentered
        ));
    }

    #[test]
    fn hsic_requires_centered_inputs() {
        let k = GramMatrix::from_values(Tensor::new(&[2, 2], vec![2.0, 1.0, 1.0, 2.0]).unwrap())
            .unwrap();
        let kc = center_gram(&k).unwrap();
        assert!(matches!(hsic(&k, &kc).unwrap_err(), MetricError::NotCentered));
    }

    #[test]
    fn constant_representation_is_degenerate() {
        let r = act(&[4, 3], vec![2.5; 12]);
        let r2 = act(&[4, 2], (0..8).map(|v| v as f64).collect());
        assert!(matches!(
            linear_cka(&r, &r2).unwrap_err(),
            MetricError::DegenerateRepresentation { .. }
        ));
    }

    #[test]
    fn batch_of_two_is_always_one() {
        let r = act(&[2, 3], vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0]);
        let r2 = act(&[2, 2], vec![5.0, 1.0, 2.0, 8.0]);
        let v = linear_cka(&r, &r2).unwrap().item().unwrap();
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
    }
}
