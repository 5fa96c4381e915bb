use guidelab_guidance::{
    compute_layer_mapping, flatten_activation, guide_batch, guide_forward, guided_loss,
    GuidanceError, GuideInputMode, LayerMapping, MetricKind,
};
use guidelab_metrics::NetworkTag;
use guidelab_tensor::{RngState, Tensor};
use guidelab_zoo::{build_network, ActivationRecord, Batch, BatchInput, Family, Mode, NetworkSpec};

fn record_of(tensors: Vec<Tensor<f64>>) -> ActivationRecord<f64> {
    let pairs = tensors
        .into_iter()
        .enumerate()
        .map(|(i, t)| (format!("tap{i}"), t))
        .collect();
    ActivationRecord::new(0, pairs)
}

#[test]
fn guide_batch_same_is_bit_identical() {
    let x = RngState::new(1).randn::<f64>(&[4, 2, 3, 3]).unwrap();
    let batch = Batch::images(7, x.clone());
    let out = guide_batch(&batch, GuideInputMode::Same, 0, &mut RngState::new(2)).unwrap();
    assert_eq!(out.id, 7);
    let BatchInput::Images(y) = &out.input else {
        panic!("expected image input")
    };
    assert_eq!(x.to_vec(), y.to_vec());
}

#[test]
fn image_noise_is_standard_normal() {
    let batch = Batch::images(0, Tensor::<f64>::zeros(&[64, 3, 16, 16]));
    let out = guide_batch(&batch, GuideInputMode::Noise, 0, &mut RngState::new(3)).unwrap();
    let BatchInput::Images(noise) = &out.input else {
        panic!("expected image input")
    };
    let v = noise.to_vec();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 0.05, "sample mean {mean}");
    assert!((0.95..1.05).contains(&std), "sample std {std}");
}

#[test]
fn noise_is_deterministic_given_the_rng_state() {
    let batch = Batch::images(0, Tensor::<f64>::zeros(&[4, 2, 5, 5]));
    let a = guide_batch(&batch, GuideInputMode::Noise, 0, &mut RngState::new(9)).unwrap();
    let b = guide_batch(&batch, GuideInputMode::Noise, 0, &mut RngState::new(9)).unwrap();
    let (BatchInput::Images(xa), BatchInput::Images(xb)) = (&a.input, &b.input) else {
        panic!("expected image input")
    };
    assert_eq!(xa.to_vec(), xb.to_vec());
}

#[test]
fn token_noise_draws_valid_ids_and_keeps_the_mask() {
    let mask = vec![true, true, false, true, true, true];
    let batch =
        Batch::<f64>::tokens_masked(0, vec![5, 5, 0, 5, 5, 5], 2, 3, Some(mask.clone())).unwrap();
    let out = guide_batch(&batch, GuideInputMode::Noise, 4, &mut RngState::new(11)).unwrap();
    let BatchInput::Tokens { ids, mask: m, .. } = &out.input else {
        panic!("expected token input")
    };
    assert!(ids.iter().all(|&i| i < 4), "ids stay inside the guide vocab");
    assert_eq!(m.as_deref(), Some(&mask[..]), "padding structure is preserved");
}

#[test]
fn guided_total_composes_task_loss_and_cka_dissimilarity() {
    // Derived pair: X = [[1,0],[0,1],[0,0]], Y = [[1],[2],[3]] has linear
    // CKA 3/(2*sqrt(10)), so one mapped pair adds 1 - that to the task loss.
    let x = Tensor::<f64>::new(&[3, 2], vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let y = Tensor::<f64>::new(&[3, 1], vec![1.0, 2.0, 3.0]).unwrap();
    let task = Tensor::<f64>::scalar(2.0).unwrap();
    let mapping = compute_layer_mapping(1, 1).unwrap();
    let out = guided_loss(
        &task,
        &record_of(vec![x]),
        &record_of(vec![y]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap();
    let expect = 2.0 + (1.0 - 3.0 / (2.0 * 10f64.sqrt()));
    assert!((out.total.item().unwrap() - expect).abs() < 1e-9);
    assert!((out.total.item().unwrap() - 2.52566).abs() < 1e-5);
    assert_eq!(out.per_layer.len(), 1);
}

#[test]
fn empty_mapping_returns_the_task_loss_itself() {
    let task = Tensor::<f64>::scalar(0.75).unwrap();
    let out = guided_loss(
        &task,
        &record_of(vec![]),
        &record_of(vec![]),
        &LayerMapping::empty(),
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap();
    assert_eq!(out.total.id(), task.id(), "same tensor, not a copy");
    assert_eq!(out.dissimilarity_total.item().unwrap(), 0.0);
    assert!(out.per_layer.is_empty());
}

#[test]
fn identical_records_have_zero_dissimilarity() {
    let a = RngState::new(21).randn::<f64>(&[5, 4]).unwrap();
    let b = RngState::new(22).randn::<f64>(&[5, 6]).unwrap();
    let task = Tensor::<f64>::scalar(1.5).unwrap();
    let mapping = compute_layer_mapping(2, 2).unwrap();
    let out = guided_loss(
        &task,
        &record_of(vec![a.clone(), b.clone()]),
        &record_of(vec![a, b]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap();
    assert!(out.dissimilarity_total.item().unwrap().abs() < 1e-6);
    for ((_, _), d) in &out.per_layer {
        let v = d.item().unwrap();
        assert!((-1e-9..=1.0).contains(&v), "cka dissimilarity in [0,1], got {v}");
    }
    assert!((out.total.item().unwrap() - 1.5).abs() < 1e-6);
}

#[test]
fn breakdown_sums_are_consistent() {
    let t1 = RngState::new(31).randn::<f64>(&[6, 3]).unwrap();
    let t2 = RngState::new(32).randn::<f64>(&[6, 5]).unwrap();
    let t3 = RngState::new(33).randn::<f64>(&[6, 4]).unwrap();
    let g1 = RngState::new(34).randn::<f64>(&[6, 2]).unwrap();
    let g2 = RngState::new(35).randn::<f64>(&[6, 7]).unwrap();
    let task = Tensor::<f64>::scalar(0.25).unwrap();
    let mapping = compute_layer_mapping(3, 2).unwrap();
    for metric in [MetricKind::Cka, MetricKind::Rsa] {
        let out = guided_loss(
            &task,
            &record_of(vec![t1.clone(), t2.clone(), t3.clone()]),
            &record_of(vec![g1.clone(), g2.clone()]),
            &mapping,
            metric,
            None,
            None,
        )
        .unwrap();
        let parts: f64 = out.per_layer.iter().map(|(_, d)| d.item().unwrap()).sum();
        let dissim = out.dissimilarity_total.item().unwrap();
        let total = out.total.item().unwrap();
        assert!((dissim - parts).abs() < 1e-6);
        assert!((total - (0.25 + dissim)).abs() < 1e-6);
        if metric == MetricKind::Cka {
            for (_, d) in &out.per_layer {
                let v = d.item().unwrap();
                assert!((-1e-9..=1.0 + 1e-9).contains(&v), "{v}");
            }
        }
    }
}

#[test]
fn gradients_reach_the_target_but_never_the_guide() {
    let t1 = Tensor::<f64>::param(&[4, 3], RngState::new(41).randn::<f64>(&[4, 3]).unwrap().to_vec()).unwrap();
    let g1 = Tensor::<f64>::param(&[4, 5], RngState::new(42).randn::<f64>(&[4, 5]).unwrap().to_vec()).unwrap();
    let task = Tensor::<f64>::scalar(0.0).unwrap();
    let mapping = compute_layer_mapping(1, 1).unwrap();
    let out = guided_loss(
        &task,
        &record_of(vec![t1.clone()]),
        &record_of(vec![g1.clone()]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap();
    out.total.backward().unwrap();
    let tg = t1.grad().expect("target activation gets a gradient");
    assert!(tg.iter().any(|&v| v != 0.0));
    assert!(g1.grad().is_none(), "guide activations stay constant");
}

#[test]
fn small_batches_are_rejected_for_guidance() {
    let a = RngState::new(51).randn::<f64>(&[2, 4]).unwrap();
    let task = Tensor::<f64>::scalar(1.0).unwrap();
    let mapping = compute_layer_mapping(1, 1).unwrap();
    let err = guided_loss(
        &task,
        &record_of(vec![a.clone()]),
        &record_of(vec![a]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, GuidanceError::BatchTooSmall { min: 3, got: 2 }), "{err}");
}

#[test]
fn record_and_batch_mismatches_error() {
    let a = RngState::new(61).randn::<f64>(&[4, 3]).unwrap();
    let b = RngState::new(62).randn::<f64>(&[5, 3]).unwrap();
    let task = Tensor::<f64>::scalar(1.0).unwrap();
    let mapping = compute_layer_mapping(2, 1).unwrap();
    let err = guided_loss(
        &task,
        &record_of(vec![a.clone()]),
        &record_of(vec![a.clone()]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, GuidanceError::RecordLength { side: "target", .. }), "{err}");

    let err = guided_loss(
        &task,
        &record_of(vec![a.clone(), a.clone()]),
        &record_of(vec![b]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, GuidanceError::BatchMismatch { target: 4, guide: 5 }), "{err}");

    let err = guided_loss(
        &Tensor::<f64>::new(&[2], vec![1.0, 2.0]).unwrap(),
        &record_of(vec![a.clone(), a.clone()]),
        &record_of(vec![a.clone()]),
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, GuidanceError::NonScalarTaskLoss(_)), "{err}");
}

#[test]
fn all_valid_mask_flattens_like_no_mask() {
    let x = RngState::new(71).randn::<f64>(&[2, 5, 8]).unwrap();
    let m = flatten_activation(&x, Some(&[true; 10]), "l", NetworkTag::Target).unwrap();
    assert_eq!(m.values().shape(), &[2, 40]);
    assert_eq!(m.values().to_vec(), x.to_vec());
}

/// End to end: a frozen transformer decoder guides an equal-depth rnn on the
/// same token batch. Equal tap counts give the identity mapping; gradients
/// land on every target parameter and on no guide parameter, and the guide's
/// state survives bit-for-bit.
#[test]
fn transformer_guide_shapes_an_rnn_target() {
    let vocab = 7;
    let t_spec = NetworkSpec::rnn(2, 10, vocab, 8);
    let g_spec = NetworkSpec::transformer(Family::TransformerDecoder, 2, 6, 2, vocab, 8);
    let target = build_network::<f64>(&t_spec, &mut RngState::new(81)).unwrap();
    let mut guide = build_network::<f64>(&g_spec, &mut RngState::new(82)).unwrap();
    guide.set_mode(Mode::Eval);
    let guide_before: Vec<(String, Vec<usize>, Vec<f64>)> = guide.export_tensors();

    let ids: Vec<usize> = (0..20).map(|i| (i * 3 + 1) % vocab).collect();
    let batch = Batch::tokens(0, ids.clone(), 4, 5).unwrap();
    let (logits, target_rec) = target.forward_with_taps(&batch).unwrap();
    let guide_rec = guide_forward(&guide, &batch).unwrap();

    let mapping = compute_layer_mapping(target_rec.len(), guide_rec.len()).unwrap();
    assert_eq!(mapping.pairs(), [(0, 0), (1, 1)]);

    let labels: Vec<i64> = ids.iter().map(|&i| i as i64).collect();
    let task = logits
        .reshape(&[20, vocab])
        .unwrap()
        .softmax_cross_entropy(&labels)
        .unwrap();
    let out = guided_loss(
        &task,
        &target_rec,
        &guide_rec,
        &mapping,
        MetricKind::Cka,
        None,
        None,
    )
    .unwrap();
    assert!(out.total.item().unwrap() > task.item().unwrap());
    out.total.backward().unwrap();

    for (name, p) in target.params() {
        let g = p.grad().unwrap_or_else(|| panic!("{name} has no gradient"));
        assert!(g.iter().all(|v| v.is_finite()), "{name}");
    }
    for (name, p) in guide.params() {
        assert!(p.grad().is_none(), "guide param {name} must stay gradient-free");
    }
    assert_eq!(guide.export_tensors(), guide_before, "guide state is untouched");
}
