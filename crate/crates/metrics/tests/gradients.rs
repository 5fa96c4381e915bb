//! Finite-difference checks of the metric gradients (the values that feed
//! the guidance loss), in f64.

use guidelab_metrics::{cka_dissimilarity, rsa_dissimilarity, ActivationMatrix, NetworkTag};
use guidelab_tensor::check::gradcheck;
use guidelab_tensor::{RngState, Tensor};

fn wrap(t: &Tensor<f64>) -> ActivationMatrix<f64> {
    ActivationMatrix::new(t.clone(), "fd", NetworkTag::Target).unwrap()
}

#[test]
fn cka_dissimilarity_gradient_wrt_both_inputs() {
    let mut rng = RngState::new(31);
    for trial in 0..10 {
        let a: Vec<f64> = (0..32).map(|_| rng.next_normal_f64()).collect();
        let b: Vec<f64> = (0..24).map(|_| rng.next_normal_f64()).collect();
        let report = gradcheck(
            |xs| {
                cka_dissimilarity(&wrap(&xs[0]), &wrap(&xs[1]))
                    .map_err(|e| match e {
                        guidelab_metrics::MetricError::Tensor(t) => t,
                        other => panic!("unexpected metric error: {other}"),
                    })
            },
            &[(vec![8, 4], a), (vec![8, 3], b)],
            1e-5,
        )
        .unwrap();
        assert!(
            report.within(1e-4),
            "trial {trial}: err {} (analytic {}, numeric {})",
            report.max_err,
            report.analytic,
            report.numeric
        );
    }
}

#[test]
fn rsa_dissimilarity_gradient_wrt_both_inputs() {
    let mut rng = RngState::new(32);
    for trial in 0..10 {
        let a: Vec<f64> = (0..32).map(|_| rng.next_normal_f64()).collect();
        let b: Vec<f64> = (0..24).map(|_| rng.next_normal_f64()).collect();
        let report = gradcheck(
            |xs| {
                rsa_dissimilarity(&wrap(&xs[0]), &wrap(&xs[1]))
                    .map_err(|e| match e {
                        guidelab_metrics::MetricError::Tensor(t) => t,
                        other => panic!("unexpected metric error: {other}"),
                    })
            },
            &[(vec![8, 4], a), (vec![8, 3], b)],
            1e-5,
        )
        .unwrap();
        assert!(
            report.within(1e-4),
            "trial {trial}: err {} (analytic {}, numeric {})",
            report.max_err,
            report.analytic,
            report.numeric
        );
    }
}
