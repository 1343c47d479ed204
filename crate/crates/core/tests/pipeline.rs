mod common;

use std::fs;
use std::path::Path;

use serde_json::json;
use surfprobe::runner::{compare_reports, export_figure_data, run_experiment, ExperimentConfig, RunReport};
use surfprobe::synthetic::Scheme;

fn config(value: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(value).unwrap()
}

fn small_corpus(dir: &Path, scheme: Scheme, n: usize) -> String {
    let spec = common::spec("abcdef", n, scheme, 5);
    common::write_corpus(dir, "corpus", &spec).display().to_string()
}

fn quick(path: &str, tasks: serde_json::Value) -> ExperimentConfig {
    config(json!({
        "embeddings": {"path": path, "format": "jsonl"},
        "tasks": tasks,
        "folds": 3,
        "model": {"hidden_dim": 16},
        "train": {"epochs": 2, "batch_size": 16},
        "seed": 3
    }))
}

#[test]
fn onehot_first_character_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let spec = common::spec(common::ALPHABET_26, 600, Scheme::PositionalOnehot, 1);
    let path = common::write_corpus(dir.path(), "onehot", &spec);
    let cfg = config(json!({
        "embeddings": {"path": path, "format": "jsonl"},
        "tasks": {"constitution": {"positions": [1], "directions": ["forward"]}},
        "model": {"hidden_dim": 64},
        "train": {"batch_size": 16},
        "seed": 11
    }));
    let report = run_experiment(&cfg).unwrap();
    assert!(report.failures.is_empty());
    let acc = report.report("constitution/forward/1").unwrap().mean("accuracy").unwrap();
    assert!(acc >= 0.99, "accuracy {acc}");
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::CharBag { max_n: 2 }, 120);
    let tasks = json!({"length": true, "substring": true, "constitution": {"positions": [1, 2]}});
    let mut bytes = Vec::new();
    // the output directory is part of the recorded config, so reuse it
    for workers in [1, 1, 3] {
        let mut cfg = quick(&path, tasks.clone());
        cfg.workers = workers;
        cfg.output_dir = Some(dir.path().join("run"));
        run_experiment(&cfg).unwrap();
        let out = cfg.output_dir.unwrap();
        bytes.push((
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out.join("summary.csv")).unwrap(),
        ));
    }
    assert!(bytes[0] == bytes[1]);
    assert!(bytes[0] == bytes[2]);
}

#[test]
fn seed_changes_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::Gaussian { sigma: 1.0, dim: 8 }, 100);
    let a = run_experiment(&quick(&path, json!({"length": true}))).unwrap();
    let mut cfg = quick(&path, json!({"length": true}));
    cfg.seed += 1;
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a.report("length").unwrap().folds, b.report("length").unwrap().folds);
}

#[test]
fn single_fold_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::PositionalOnehot, 30);
    let mut cfg = quick(&path, json!({"length": true}));
    cfg.folds = 1;
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.kind(), "config");
}

#[test]
fn missing_embedding_file_is_reported_before_any_work() {
    let cfg = quick("/nonexistent/vectors.jsonl", json!({"length": true}));
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn failing_units_are_listed_and_the_rest_is_kept() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::PositionalOnehot, 60);
    // no string is 30 characters long
    let cfg = quick(
        &path,
        json!({"length": true, "constitution": {"positions": [1, 30], "directions": ["forward"]}}),
    );
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].task, "constitution/forward/30");
    assert!(report.report("length").is_some());
    assert!(report.report("constitution/forward/1").is_some());
}

#[test]
fn fold_bookkeeping_matches_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::PositionalOnehot, 100);
    let report = run_experiment(&quick(&path, json!({"length": true}))).unwrap();
    assert_eq!(report.fold_sizes.iter().sum::<usize>(), report.n_tokens);
    let length = report.report("length").unwrap();
    assert_eq!(length.folds.len(), 3);
    for f in &length.folds {
        assert_eq!(f.eval_size, report.fold_sizes[f.fold]);
        assert_eq!(f.train_size + f.eval_size, report.n_tokens);
    }
    assert_eq!(length.metrics["mse"].per_fold.len(), 3);
    assert_eq!(length.length_predictions.len(), report.n_tokens);
    let support: usize = length.class_support.values().sum();
    assert_eq!(support, report.n_tokens);
}

#[test]
fn report_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::PositionalOnehot, 50);
    let mut cfg = quick(&path, json!({"length": true, "substring": true}));
    cfg.output_dir = Some(dir.path().join("out"));
    let report = run_experiment(&cfg).unwrap();
    let loaded = RunReport::load(dir.path().join("out/report.json")).unwrap();
    assert_eq!(loaded, report);
    assert_eq!(loaded.embedding_sha256.len(), 64);
    let csv = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert!(csv.starts_with("task,metric,mean,folds\n"));
    assert!(csv.contains("length,weighted_f1_pct,"));
}

#[test]
fn figure_data_has_one_row_per_example_and_per_curve_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::PositionalOnehot, 80);
    let cfg = config(json!({
        "embeddings": {"path": path, "format": "jsonl"},
        "tasks": {"length": true, "constitution": {}},
        "folds": 2,
        "model": {"hidden_dim": 8},
        "train": {"epochs": 1, "batch_size": 64},
        "seed": 0
    }));
    let report = run_experiment(&cfg).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let out = dir.path().join("fig");
    let files = export_figure_data(&report, &out).unwrap();
    assert_eq!(files.len(), 2);
    let lengths = fs::read_to_string(out.join("length_predictions.csv")).unwrap();
    assert_eq!(lengths.lines().count(), 1 + report.n_tokens);
    let curves = fs::read_to_string(out.join("constitution_accuracy.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("n,direction,accuracy"));
    assert_eq!(curves.lines().count(), 1 + 20);

    let mut empty = report.clone();
    empty.reports.clear();
    assert!(export_figure_data(&empty, &out).is_err());
}

#[test]
fn compare_lists_structural_and_metric_differences() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_corpus(dir.path(), Scheme::PositionalOnehot, 50);
    let a = run_experiment(&quick(&path, json!({"length": true, "substring": true}))).unwrap();
    assert!(compare_reports(&a, &a).is_empty());

    let mut b = a.clone();
    let m = b.reports[0].metrics.get_mut("mse").unwrap();
    m.mean += 0.5;
    let diff = compare_reports(&a, &b);
    assert!(diff.structural.is_empty());
    assert_eq!(diff.metrics.len(), 1);
    assert_eq!(diff.metrics[0].metric, "mse");
    assert!((diff.metrics[0].delta().unwrap() - 0.5).abs() < 1e-12);

    let mut c = a.clone();
    c.reports.retain(|r| r.task != "substring");
    c.config.tasks.substring = false;
    let diff = compare_reports(&a, &c);
    assert!(!diff.structural.is_empty());
    assert!(diff.metrics.iter().all(|d| d.task == "substring" && d.b.is_none()));
}

#[test]
fn word2vec_input_with_markers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.txt");
    let mut text = String::from("14 3\n[CLS] 0 0 0\n## 1 1 1\n");
    let words = ["a", "b", "c", "ab", "##bc", "\u{2581}ca", "abc", "cab", "##bca", "aa", "bb", "cc"];
    for (i, w) in words.iter().enumerate() {
        text.push_str(&format!("{w} {} {} {}\n", i, i % 3, w.len()));
    }
    fs::write(&path, text).unwrap();
    let cfg = config(json!({
        "embeddings": {"path": path, "format": "word2vec"},
        "tasks": {"length": true, "constitution": {"positions": [1], "directions": ["backward"]}},
        "folds": 2,
        "model": {"hidden_dim": 8},
        "train": {"epochs": 1},
        "seed": 0
    }));
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.n_tokens, words.len());
    assert_eq!(report.excluded_special, 1);
    assert_eq!(report.excluded_marker_only, 1);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
}
