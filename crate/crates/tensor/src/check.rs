//! Finite-difference gradient checking. The numeric side re-evaluates the
//! loss at perturbed inputs and never touches the backward pass, so it is an
//! independent route to the same derivative.

use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_err: f64,
    pub worst_input: usize,
    pub worst_coord: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_err < tol
    }
}

/// Per-coordinate error |a - n| / max(1, |a|, |n|): absolute near zero,
/// relative for large derivatives.
fn coord_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / 1.0f64.max(a.abs()).max(n.abs())
}

/// Compares backward-pass gradients of `f` against central differences, in
/// f64. `inputs` are (shape, data) pairs; every coordinate of every input is
/// perturbed by +-eps.
pub fn gradcheck<F>(
    f: F,
    inputs: &[(Vec<usize>, Vec<f64>)],
    eps: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
{
    let leaves: Vec<Tensor<f64>> = inputs
        .iter()
        .map(|(shape, data)| Tensor::param(shape, data.clone()))
        .collect::<Result<_>>()?;
    let loss = f(&leaves)?;
    loss.backward()?;
    let analytic: Vec<Vec<f64>> = leaves
        .iter()
        .map(|l| l.grad().unwrap_or_else(|| vec![0.0; l.numel()]))
        .collect();

    let eval = |datas: &[Vec<f64>]| -> Result<f64> {
        let consts: Vec<Tensor<f64>> = inputs
            .iter()
            .zip(datas)
            .map(|((shape, _), data)| Tensor::new(shape, data.clone()))
            .collect::<Result<_>>()?;
        f(&consts)?.item()
    };

    let mut report = GradCheckReport {
        max_err: 0.0,
        worst_input: 0,
        worst_coord: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let base: Vec<Vec<f64>> = inputs.iter().map(|(_, d)| d.clone()).collect();
    for (i, data) in base.iter().enumerate() {
        for j in 0..data.len() {
            let mut plus = base.clone();
            plus[i][j] += eps;
            let mut minus = base.clone();
            minus[i][j] -= eps;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * eps);
            let err = coord_err(analytic[i][j], numeric);
            if err > report.max_err {
                report = GradCheckReport {
                    max_err: err,
                    worst_input: i,
                    worst_coord: j,
                    analytic: analytic[i][j],
                    numeric,
                };
            }
        }
    }
    Ok(report)
}
