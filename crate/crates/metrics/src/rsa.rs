use guidelab_tensor::{Element, Tensor};

use crate::error::{MetricError, Result};
use crate::{ActivationMatrix, RDMatrix};

/// Pairwise cosine distances D_ij = 1 - cos(R_i, R_j).
pub fn rdm_cosine<T: Element>(r: &ActivationMatrix<T>) -> Result<RDMatrix<T>> {
    let b = r.batch();
    let norm_sq = r.values().square()?.sum_last()?;
    let floor = T::epsilon() * T::epsilon();
    norm_sq.with_data(|ns| {
        for (row, &v) in ns.iter().enumerate() {
            if v <= floor {
                return Err(MetricError::DegenerateSample {
                    layer: r.layer_name().to_string(),
                    row,
                });
            }
        }
        Ok(())
    })?;
    let norms = norm_sq.sqrt_elem()?;
    let unit = r.values().div(&norms)?;
    let cos = unit.matmul(&unit.transpose()?)?;
    let dist = cos.neg()?.add_scalar(T::one())?;
    debug_assert_eq!(dist.shape(), &[b, b]);
    Ok(RDMatrix::new_unchecked(dist, r.layer_name().to_string()))
}

fn lower_triangle_indices(b: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(b * (b - 1) / 2);
    for i in 0..b {
        for j in 0..i {
            idx.push(i * b + j);
        }
    }
    idx
}

fn centered<T: Element>(v: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let n = v.numel();
    let mean = v.sum_all()?.scale(T::one() / T::from_f64(n as f64))?;
    let dev = v.sub(&mean)?;
    let var = dev.square()?.sum_all()?;
    Ok((dev, var))
}

/// Pearson correlation of the strictly-lower triangles of the two cosine
/// RDMs. Needs b >= 3 so the triangle has at least three entries.
pub fn rsa_similarity<T: Element>(
    r: &ActivationMatrix<T>,
    r2: &ActivationMatrix<T>,
) -> Result<Tensor<T>> {
    if r.batch() != r2.batch() {
        return Err(MetricError::SizeMismatch {
            lhs: r.batch(),
            rhs: r2.batch(),
        });
    }
    let b = r.batch();
    if b < 3 {
        return Err(MetricError::DegenerateBatch { min: 3, got: b });
    }
    let idx = lower_triangle_indices(b);
    let d1 = rdm_cosine(r)?;
    let d2 = rdm_cosine(r2)?;
    let v1 = d1.values().gather_flat(&idx)?;
    let v2 = d2.values().gather_flat(&idx)?;
    let (dev1, var1) = centered(&v1)?;
    let (dev2, var2) = centered(&v2)?;
    for (v, var, act) in [(&v1, &var1, r), (&v2, &var2, r2)] {
        let scale = v
            .with_data(|d| d.iter().map(|&x| x.to_f64_e() * x.to_f64_e()).sum::<f64>())
            .max(T::epsilon().to_f64_e());
        if var.item()?.to_f64_e() <= scale * T::epsilon().to_f64_e() {
            return Err(MetricError::ZeroVariance {
                layer: act.layer_name().to_string(),
            });
        }
    }
    let cov = dev1.mul(&dev2)?.sum_all()?;
    Ok(cov.div(&var1.mul(&var2)?.sqrt_elem()?)?)
}

/// 1 - Pearson correlation of the RDM lower triangles.
pub fn rsa_dissimilarity<T: Element>(
    r: &ActivationMatrix<T>,
    r2: &ActivationMatrix<T>,
) -> Result<Tensor<T>> {
    let sim = rsa_similarity(r, r2)?;
    Ok(sim.neg()?.add_scalar(T::one())?)
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
    fn orthogonal_and_identical_unit_rows() {
        // rows e1, e2, e1
        let r = act(&[3, 2], vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let d = rdm_cosine(&r).unwrap();
        let want = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        for (got, want) in d.values().to_vec().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn antipodal_rows_hit_two() {
        let r = act(&[2, 2], vec![1.0, 0.0, -1.0, 0.0]);
        let d = rdm_cosine(&r).unwrap();
        let v = d.values().to_vec();
        assert!((v[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_rejected() {
        let r = act(&[3, 2], vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            rdm_cosine(&r).unwrap_err(),
            MetricError::DegenerateSample { row: 1, .. }
        ));
    }

    #[test]
    fn self_similarity_is_one() {
        let r = act(&[4, 3], vec![1.0, 0.2, -0.5, 2.0, 0.3, 0.4, -1.0, 0.8, 0.1, 0.0, 0.9, 2.2]);
        let s = rsa_similarity(&r, &r).unwrap().item().unwrap();
        assert!((s - 1.0).abs() < 1e-10, "got {s}");
    }

    #[test]
    fn batch_below_three_rejected() {
        let r = act(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            rsa_similarity(&r, &r).unwrap_err(),
            MetricError::DegenerateBatch { min: 3, .. }
        ));
    }

    #[test]
    fn identical_rows_have_constant_triangle() {
        // all rows parallel: distances all zero -> zero variance
        let r = act(&[3, 2], vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let other = act(&[3, 2], vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            rsa_similarity(&r, &other).unwrap_err(),
            MetricError::ZeroVariance { .. }
        ));
    }
}
