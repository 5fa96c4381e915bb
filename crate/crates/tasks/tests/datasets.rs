use guidelab_tasks::{
    build_lm_dataset, collate_sequences, copy_paste_sep, gen_copy_paste, gen_images, gen_parity,
    load_image_dataset, load_images, load_parity, load_sequences, manifest_hash, save_images,
    save_parity, save_sequences, CopyPasteConfig, ParityConfig, SynthImageSpec, TaskError, PAD_ID,
};

#[test]
fn copy_paste_examples_have_the_documented_layout() {
    let cfg = CopyPasteConfig {
        n: 1000,
        ..CopyPasteConfig::default()
    };
    let split = gen_copy_paste(&cfg, 11).unwrap();
    assert_eq!(split.train.len(), 800);
    assert_eq!(split.val.len(), 100);
    assert_eq!(split.test.len(), 100);

    let sep = copy_paste_sep(cfg.vocab_size);
    let mut seen_lens = std::collections::BTreeSet::new();
    for ex in split.train.iter().chain(&split.val).chain(&split.test) {
        let len = ex.len();
        assert_eq!(len % 2, 1, "length 2k+1 is odd");
        let k = (len - 1) / 2;
        assert!((20..=40).contains(&(2 * k + 2)), "total footprint in range");
        seen_lens.insert(len);

        let content = &ex.input_tokens[..k];
        assert!(content.iter().all(|&t| (1..=cfg.vocab_size).contains(&t)));
        assert_eq!(ex.input_tokens[k], sep);
        assert!(ex.input_tokens[k + 1..].iter().all(|&t| t == PAD_ID));

        assert!(ex.target_tokens[..k + 1].iter().all(|&t| t == -1));
        let echoed: Vec<usize> = ex.target_tokens[k + 1..]
            .iter()
            .map(|&t| t as usize)
            .collect();
        assert_eq!(echoed, content, "targets repeat the content after SEP");
    }
    assert!(seen_lens.len() > 5, "lengths vary across the range");
}

#[test]
fn generation_is_reproducible_and_seed_sensitive() {
    let cfg = CopyPasteConfig {
        n: 300,
        ..CopyPasteConfig::default()
    };
    let a = gen_copy_paste(&cfg, 5).unwrap();
    let b = gen_copy_paste(&cfg, 5).unwrap();
    let c = gen_copy_paste(&cfg, 6).unwrap();
    assert_eq!(a.manifest, b.manifest);
    assert_eq!(a.train, b.train);
    assert_ne!(a.manifest, c.manifest);
}

#[test]
fn sequence_files_round_trip_with_identical_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CopyPasteConfig {
        n: 120,
        ..CopyPasteConfig::default()
    };
    let split = gen_copy_paste(&cfg, 2).unwrap();

    let paths: Vec<_> = ["train", "val", "test"]
        .iter()
        .map(|s| dir.path().join(format!("{s}.txt")))
        .collect();
    save_sequences(&paths[0], &split.train).unwrap();
    save_sequences(&paths[1], &split.val).unwrap();
    save_sequences(&paths[2], &split.test).unwrap();

    let train = load_sequences(&paths[0]).unwrap();
    let val = load_sequences(&paths[1]).unwrap();
    let test = load_sequences(&paths[2]).unwrap();
    assert_eq!(train, split.train);
    assert_eq!(manifest_hash(&train, &val, &test), split.manifest);
}

#[test]
fn parity_labels_match_a_popcount_oracle() {
    let split = gen_parity(&ParityConfig::default(), 7).unwrap();
    assert_eq!(split.train.len(), 80_000);
    assert_eq!(split.val.len(), 10_000);
    assert_eq!(split.test.len(), 10_000);
    for ex in split.train.iter().take(2000).chain(&split.val).chain(&split.test) {
        assert!((2..=50).contains(&ex.bits.len()));
        let ones = ex.bits.iter().filter(|&&b| b == 1).count();
        assert_eq!(ex.label == 1, ones % 2 == 0);
    }
}

#[test]
fn parity_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ParityConfig {
        n: 200,
        ..ParityConfig::default()
    };
    let split = gen_parity(&cfg, 4).unwrap();
    let path = dir.path().join("train.txt");
    save_parity(&path, &split.train).unwrap();
    assert_eq!(load_parity(&path).unwrap(), split.train);

    let text = std::fs::read_to_string(&path).unwrap();
    let first = text.lines().next().unwrap();
    let (bits, label) = first.split_once('\t').unwrap();
    assert!(bits.chars().all(|c| c == '0' || c == '1'));
    assert!(label == "0" || label == "1");
}

#[test]
fn lm_windows_tile_the_corpus_without_overlap() {
    let dir = tempfile::tempdir().unwrap();
    // 2551 bytes admits starts 0, 50, ..., 2500: 51 windows of length 50.
    // Aperiodic printable ASCII so every window's content is unique.
    let corpus: String = (0..2551u64)
        .map(|i| char::from(32 + ((i.wrapping_mul(2654435761) >> 7) % 95) as u8))
        .collect();
    let path = dir.path().join("corpus.txt");
    std::fs::write(&path, &corpus).unwrap();

    let split = build_lm_dataset(&path, 50, 3).unwrap();
    assert_eq!(split.total(), 51);
    assert_eq!(split.train.len(), 40);
    assert_eq!(split.val.len(), 5);
    assert_eq!(split.test.len(), 6);

    let bytes = corpus.as_bytes();
    let mut starts = Vec::new();
    for ex in split.train.iter().chain(&split.val).chain(&split.test) {
        assert_eq!(ex.len(), 50);
        let window: Vec<u8> = ex.input_tokens.iter().map(|&t| t as u8).collect();
        let start = (0..=bytes.len() - 50)
            .find(|&s| s % 50 == 0 && bytes[s..s + 50] == window[..])
            .expect("window comes from a stride-aligned corpus slice");
        starts.push(start);
        for t in 0..49 {
            assert_eq!(ex.target_tokens[t], ex.input_tokens[t + 1] as i64);
        }
        assert_eq!(ex.target_tokens[49], bytes[start + 50] as i64);
    }
    starts.sort_unstable();
    starts.dedup();
    assert_eq!(starts.len(), 51, "inputs never share corpus positions");

    let again = build_lm_dataset(&path, 50, 3).unwrap();
    assert_eq!(again.manifest, split.manifest);
}

#[test]
fn image_container_round_trips_bit_exactly() {
    let spec = SynthImageSpec {
        n: 40,
        ..SynthImageSpec::default()
    };
    let split = gen_images(&spec, 13).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shapes.gimg");
    save_images(&path, &split.train).unwrap();
    let reloaded = load_images(&path).unwrap();
    assert_eq!(reloaded, split.train);
}

#[test]
fn image_file_ingestion_splits_and_hashes_reproducibly() {
    let spec = SynthImageSpec {
        n: 4000,
        ..SynthImageSpec::default()
    };
    let generated = gen_images(&spec, 21).unwrap();
    assert_eq!(generated.train.len(), 3200);
    assert_eq!(generated.val.len(), 400);
    assert_eq!(generated.test.len(), 400);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all.gimg");
    let mut all = generated.train.clone();
    all.extend(generated.val.iter().cloned());
    all.extend(generated.test.iter().cloned());
    save_images(&path, &all).unwrap();

    let a = load_image_dataset(&path, 9).unwrap();
    let b = load_image_dataset(&path, 9).unwrap();
    assert_eq!(a.manifest, b.manifest);
    assert_eq!(a.train.len(), 3200);
    let c = load_image_dataset(&path, 10).unwrap();
    assert_ne!(a.manifest, c.manifest, "seed reorders the shuffle");
}

#[test]
fn corrupt_image_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthImageSpec {
        n: 10,
        ..SynthImageSpec::default()
    };
    let split = gen_images(&spec, 1).unwrap();
    let path = dir.path().join("ok.gimg");
    save_images(&path, &split.train).unwrap();

    let good = std::fs::read(&path).unwrap();
    let truncated = dir.path().join("short.gimg");
    std::fs::write(&truncated, &good[..good.len() - 3]).unwrap();
    assert!(matches!(
        load_images(&truncated),
        Err(TaskError::BadFormat { .. })
    ));

    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    let bad_path = dir.path().join("magic.gimg");
    std::fs::write(&bad_path, &bad_magic).unwrap();
    assert!(matches!(
        load_images(&bad_path),
        Err(TaskError::BadFormat { .. })
    ));
}

#[test]
fn sequence_collation_pads_with_ignore_and_false_mask() {
    let cfg = CopyPasteConfig {
        n: 50,
        ..CopyPasteConfig::default()
    };
    let split = gen_copy_paste(&cfg, 8).unwrap();
    let idx: Vec<usize> = (0..8).collect();
    let batch = collate_sequences(&split.train, &idx, PAD_ID).unwrap();
    assert_eq!(batch.batch, 8);
    let max_len = idx.iter().map(|&i| split.train[i].len()).max().unwrap();
    assert_eq!(batch.len, max_len);
    for (row, &i) in idx.iter().enumerate().map(|(r, i)| (r, i)) {
        let ex = &split.train[i];
        for t in 0..batch.len {
            let flat = row * batch.len + t;
            if t < ex.len() {
                assert_eq!(batch.ids[flat], ex.input_tokens[t]);
                assert_eq!(batch.targets[flat], ex.target_tokens[t]);
                assert!(batch.mask[flat]);
            } else {
                assert_eq!(batch.ids[flat], PAD_ID);
                assert_eq!(batch.targets[flat], -1);
                assert!(!batch.mask[flat]);
            }
        }
    }
}
