use std::collections::BTreeMap;

use proptest::prelude::*;

use guidelab_tensor::{clip_grad_norm, save_checkpoint, load_checkpoint, CheckpointData, Tensor};

fn finite_f64() -> impl Strategy<Value = f64> {
    (-50.0f64..50.0).prop_filter("finite", |v| v.is_finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_sum_to_one(rows in 1usize..5, cols in 2usize..8, seed in any::<u64>()) {
        let mut rng = guidelab_tensor::RngState::new(seed);
        let x = rng.randn::<f64>(&[rows, cols]).unwrap();
        let y = x.softmax_last().unwrap().to_vec();
        for r in 0..rows {
            let s: f64 = y[r * cols..(r + 1) * cols].iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn add_commutes(data in proptest::collection::vec(finite_f64(), 1..20)) {
        let n = data.len();
        let a = Tensor::<f64>::new(&[n], data.clone()).unwrap();
        let rev: Vec<f64> = data.iter().rev().copied().collect();
        let b = Tensor::<f64>::new(&[n], rev).unwrap();
        let ab = a.add(&b).unwrap().to_vec();
        let ba = b.add(&a).unwrap().to_vec();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn clip_never_exceeds_max(grads in proptest::collection::vec(finite_f64(), 1..16), max_norm in 0.1f64..10.0) {
        let n = grads.len();
        let p = Tensor::<f64>::param(&[n], vec![0.0; n]).unwrap();
        p.set_grad(grads).unwrap();
        let mut map = BTreeMap::new();
        map.insert("p".to_string(), p);
        let pre = clip_grad_norm(&map, max_norm).unwrap();
        let g = map["p"].grad().unwrap();
        let post: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(post <= max_norm + 1e-9);
        prop_assert!(pre + 1e-12 >= post);
    }

    #[test]
    fn checkpoint_round_trips(
        vals in proptest::collection::vec(-1e6f32..1e6, 1..40),
        seed in any::<u64>(),
        stream in any::<u64>(),
        meta in "[a-z{}\":,0-9]{0,40}",
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let data = CheckpointData {
            tensors: vec![("w".into(), vec![vals.len()], vals)],
            optimizer: None,
            rng: (seed, stream, (seed as u128) << 64 | stream as u128),
            meta_json: meta,
        };
        save_checkpoint(&path, &data).unwrap();
        let back = load_checkpoint(&path).unwrap();
        prop_assert_eq!(back, data);
    }
}
