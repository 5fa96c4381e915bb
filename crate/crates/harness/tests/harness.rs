//! End-to-end runs of the experiment harness on tiny datasets: determinism,
//! guidance accounting in the log, divergence handling, and the CLI flow.

use std::fs;
use std::path::Path;

use clap::Parser;

use guidelab_analysis::read_predictions;
use guidelab_harness::{
    run, run_experiment, train_seed, Cli, CsvLogger, ExperimentConfig, GuideSource, HarnessError,
    RunSummary, TaskData,
};
use guidelab_tensor::RngState;
use guidelab_zoo::build_network;

fn cfg_from(value: serde_json::Value) -> ExperimentConfig {
    let cfg: ExperimentConfig = serde_json::from_value(value).expect("config json");
    cfg.validate().expect("config validates");
    cfg
}

/// 240 parity strings split 192/24/24; batch 32 gives 6 steps per epoch.
fn parity_config(id: &str) -> serde_json::Value {
    serde_json::json!({
        "experiment_id": id,
        "task": {"kind": "parity", "n": 240, "len_range": [2, 8], "data_seed": 7},
        "target_spec": {
            "family": "rnn_stack", "depth": 1, "width": 16,
            "activation": "tanh", "classes": 2, "context_len": 8
        },
        "lr": 3e-3,
        "batch_size": 32,
        "epochs": 2,
        "seeds": [1, 2]
    })
}

#[derive(Debug)]
struct LogRow {
    seed: u64,
    epoch: u64,
    step: u64,
    split: String,
    total: f64,
    task: f64,
    dissim: f64,
}

fn read_log(path: &Path) -> Vec<LogRow> {
    let text = fs::read_to_string(path).expect("log file");
    let mut lines = text.lines();
    let header = lines.next().expect("header line");
    assert_eq!(header, guidelab_analysis::LOG_HEADER.join(","));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 11, "row arity: {line}");
            LogRow {
                seed: f[1].parse().unwrap(),
                epoch: f[2].parse().unwrap(),
                step: f[3].parse().unwrap(),
                split: f[4].to_string(),
                total: f[5].parse().unwrap(),
                task: f[6].parse().unwrap(),
                dissim: f[7].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn rerun_is_byte_identical_and_unguided_rows_carry_no_dissimilarity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_from(parity_config("tiny-parity"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let summary_a = run_experiment(&cfg, &a).unwrap();
    let summary_b = run_experiment(&cfg, &b).unwrap();

    for file in ["log.csv", "summary.json", "config.json"] {
        let bytes_a = fs::read(a.join(file)).unwrap();
        let bytes_b = fs::read(b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs between reruns");
    }
    for ckpt in ["seed1-last.glab", "seed1-best.glab", "seed2-last.glab"] {
        let bytes_a = fs::read(a.join("checkpoints").join(ckpt)).unwrap();
        let bytes_b = fs::read(b.join("checkpoints").join(ckpt)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{ckpt} differs between reruns");
    }

    let rows = read_log(&a.join("log.csv"));
    let train_rows: Vec<&LogRow> = rows.iter().filter(|r| r.split == "train").collect();
    // 6 steps per epoch, 2 epochs, 2 seeds.
    assert_eq!(train_rows.len(), 24);
    for r in &train_rows {
        assert_eq!(r.dissim, 0.0, "unguided dissim at step {}", r.step);
        assert_eq!(r.total, r.task, "unguided total at step {}", r.step);
    }
    // Steps number globally and every epoch ends with one val and one test row.
    let seed1_steps: Vec<u64> = train_rows
        .iter()
        .filter(|r| r.seed == 1)
        .map(|r| r.step)
        .collect();
    assert_eq!(seed1_steps, (1..=12).collect::<Vec<u64>>());
    for split in ["val", "test"] {
        let n = rows.iter().filter(|r| r.split == split).count();
        assert_eq!(n, 4, "{split} rows");
    }

    assert!(summary_a.selected_epoch >= 1 && summary_a.selected_epoch <= 2);
    assert!(summary_a.val_loss_at_selected.is_finite());
    assert!((0.0..=1.0).contains(&summary_a.test_metric_mean));
    assert!(summary_a.test_metric_se.is_finite());
    assert_eq!(summary_b.selected_epoch, summary_a.selected_epoch);

    let parsed: RunSummary =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(parsed.selected_epoch, summary_a.selected_epoch);
    assert!(parsed.seeds_failed.is_empty());
}

#[test]
fn disconnect_stops_dissimilarity_after_the_cutoff_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut value = parity_config("tiny-disconnect");
    value["seeds"] = serde_json::json!([1]);
    value["epochs"] = serde_json::json!(1);
    value["guide_spec"] = serde_json::json!({
        "family": "rnn_stack", "depth": 1, "width": 16,
        "activation": "tanh", "classes": 2, "context_len": 8
    });
    value["guidance"] = serde_json::json!({
        "guide_mode": "untrained", "metric": "cka", "disconnect_after_steps": 3
    });
    let cfg = cfg_from(value);
    let out = dir.path().join("out");
    run_experiment(&cfg, &out).unwrap();

    let rows = read_log(&out.join("log.csv"));
    let train_rows: Vec<&LogRow> = rows.iter().filter(|r| r.split == "train").collect();
    assert_eq!(train_rows.len(), 6);
    for r in &train_rows {
        if r.step <= 3 {
            assert!(r.dissim > 0.0, "guided step {} has zero dissim", r.step);
            let gap = (r.total - (r.task + r.dissim)).abs();
            assert!(gap < 1e-4, "additivity off by {gap} at step {}", r.step);
        } else {
            assert_eq!(r.dissim, 0.0, "dissim past cutoff at step {}", r.step);
            assert_eq!(r.total, r.task, "total past cutoff at step {}", r.step);
        }
    }
}

#[test]
fn shared_guide_is_bit_identical_after_a_guided_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut value = parity_config("tiny-guided");
    value["seeds"] = serde_json::json!([1]);
    value["epochs"] = serde_json::json!(1);
    value["guide_checkpoint"] =
        serde_json::json!(dir.path().join("guide.glab").to_str().unwrap());
    value["guidance"] = serde_json::json!({"guide_mode": "trained", "metric": "rsa"});
    let cfg = cfg_from(value);

    // Any saved network serves as a "trained" guide for the mechanics here.
    let spec: guidelab_zoo::NetworkSpec = serde_json::from_value(serde_json::json!({
        "family": "rnn_stack", "depth": 1, "width": 12,
        "activation": "tanh", "classes": 2, "context_len": 8
    }))
    .unwrap();
    let mut rng = RngState::with_stream(99, 0);
    let net = build_network::<f32>(&spec, &mut rng).unwrap();
    let meta = guidelab_harness::CheckpointMeta {
        experiment_id: "guide-src".into(),
        seed: 0,
        epoch: 0,
        val_loss: 0.0,
        spec,
    };
    guidelab_harness::save_net_checkpoint(
        &dir.path().join("guide.glab"),
        &net,
        None,
        &rng,
        &meta,
    )
    .unwrap();

    let data = TaskData::load(&cfg.task).unwrap();
    data.check_spec(&cfg.target_spec, "target").unwrap();
    let guide = guidelab_harness::prepare_guide(&cfg, &data)
        .unwrap()
        .expect("trained mode yields a shared guide");
    let before = guide.export_tensors();

    let ckpt_dir = dir.path().join("ckpt");
    fs::create_dir_all(&ckpt_dir).unwrap();
    let mut logger =
        CsvLogger::create(&dir.path().join("log.csv"), &cfg.experiment_id, cfg.lr).unwrap();
    let outcome = train_seed(&cfg, &data, &GuideSource::Shared(&guide), 1, &mut logger, &ckpt_dir)
        .unwrap();
    assert!(outcome.failure.is_none(), "{:?}", outcome.failure);
    assert_eq!(outcome.records.len(), 1);

    let after = guide.export_tensors();
    assert_eq!(before, after, "guided training touched the guide");
}

#[test]
fn divergence_aborts_each_seed_and_surfaces_as_all_seeds_failed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_from(serde_json::json!({
        "experiment_id": "blowup",
        "task": {
            "kind": "images",
            "synth": {"classes": 2, "height": 8, "width": 8, "n": 120, "noise": 0.1},
            "data_seed": 3
        },
        "target_spec": {
            "family": "fcn", "depth": 2, "width": 8,
            "classes": 2, "input_shape": [1, 8, 8]
        },
        "task_loss": "mse",
        "lr": 1e30,
        "batch_size": 16,
        "epochs": 1,
        "seeds": [1, 2]
    }));
    let out = dir.path().join("out");
    let err = run_experiment(&cfg, &out).unwrap_err();
    assert!(
        matches!(err, HarnessError::AllSeedsFailed),
        "expected AllSeedsFailed, got {err}"
    );

    let rows = read_log(&out.join("log.csv"));
    let aborts: Vec<&LogRow> = rows.iter().filter(|r| r.split == "abort").collect();
    assert_eq!(aborts.len(), 2, "one abort row per seed");
    assert_eq!(aborts[0].seed, 1);
    assert_eq!(aborts[1].seed, 2);
    for r in &aborts {
        assert!(r.total.is_nan() && r.task.is_nan() && r.dissim.is_nan());
    }
    // Seed 2 still trained after seed 1 aborted.
    assert!(rows
        .iter()
        .any(|r| r.seed == 2 && r.split == "train"));
    // No summary is written when every seed fails.
    assert!(!out.join("summary.json").exists());
}

#[test]
fn cli_covers_gen_data_train_eval_compare_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut value = parity_config("cli-parity");
    value["seeds"] = serde_json::json!([1]);
    fs::write(&cfg_path, serde_json::to_string_pretty(&value).unwrap()).unwrap();

    let data_dir = dir.path().join("data");
    run(Cli::try_parse_from([
        "guidelab",
        "gen-data",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        data_dir.to_str().unwrap(),
    ])
    .unwrap())
    .unwrap();
    for file in ["train.txt", "val.txt", "test.txt", "manifest.txt"] {
        let meta = fs::metadata(data_dir.join(file)).expect(file);
        assert!(meta.len() > 0, "{file} is empty");
    }

    let out_dir = dir.path().join("run");
    run(Cli::try_parse_from([
        "guidelab",
        "train",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .unwrap())
    .unwrap();
    let summary: RunSummary =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.experiment_id, "cli-parity");

    let preds_best = dir.path().join("preds-best.csv");
    let preds_last = dir.path().join("preds-last.csv");
    for (ckpt, preds) in [("seed1-best.glab", &preds_best), ("seed1-last.glab", &preds_last)] {
        run(Cli::try_parse_from([
            "guidelab",
            "eval",
            "--config",
            cfg_path.to_str().unwrap(),
            "--checkpoint",
            out_dir.join("checkpoints").join(ckpt).to_str().unwrap(),
            "--split",
            "test",
            "--preds-out",
            preds.to_str().unwrap(),
        ])
        .unwrap())
        .unwrap();
    }
    let set = read_predictions(&preds_best).unwrap();
    assert!((0.0..=1.0).contains(&set.accuracy()));
    // 24 test examples, one prediction each.
    assert_eq!(set.ids().len(), 24);

    let cmp_path = dir.path().join("consistency.json");
    run(Cli::try_parse_from([
        "guidelab",
        "compare-errors",
        "--a",
        preds_best.to_str().unwrap(),
        "--b",
        preds_last.to_str().unwrap(),
        "--out",
        cmp_path.to_str().unwrap(),
    ])
    .unwrap())
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cmp_path).unwrap()).unwrap();
    for key in ["accuracy_a", "accuracy_b", "c_obs", "c_exp", "kappa"] {
        assert!(report[key].as_f64().expect(key).is_finite(), "{key}");
    }

    let curves_path = dir.path().join("curves.csv");
    run(Cli::try_parse_from([
        "guidelab",
        "plot",
        "--logs",
        out_dir.join("log.csv").to_str().unwrap(),
        "--column",
        "total",
        "--out",
        curves_path.to_str().unwrap(),
    ])
    .unwrap())
    .unwrap();
    let curves = fs::read_to_string(&curves_path).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next(), Some("series,step,mean,se"));
    // One curve point per train step.
    let points: Vec<&str> = lines.collect();
    assert_eq!(points.len(), 12);
    assert!(points.iter().all(|l| l.starts_with("cli-parity,")));
}

#[test]
fn train_subcommand_rejects_guided_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut value = parity_config("wrong-lane");
    value["guide_spec"] = serde_json::json!({
        "family": "rnn_stack", "depth": 1, "width": 16,
        "activation": "tanh", "classes": 2, "context_len": 8
    });
    value["guidance"] = serde_json::json!({"guide_mode": "untrained", "metric": "cka"});
    fs::write(&cfg_path, serde_json::to_string(&value).unwrap()).unwrap();
    let err = run(Cli::try_parse_from([
        "guidelab",
        "train",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ])
    .unwrap())
    .unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "got {err}");
}
