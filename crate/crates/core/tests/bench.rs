use std::process::Command;

use attnmil::bench::{
    compare, crossval, evaluate_dataset, explain, fold_plans, gradcheck_all, mean_and_std, train_full, write_report,
    Execution, ExperimentReport, GradCheckSettings, RunConfig, TrainedModel,
};
use attnmil::mildata::{synth_witness, Bag, Dataset, SynthConfig};
use attnmil::milpool::PoolingKind;
use attnmil::numgrad::Matrix;
use attnmil::Error;

fn quick_config() -> RunConfig {
    let mut cfg = RunConfig {
        hidden: vec![16, 8],
        folds: 3,
        repeats: 2,
        seed: 17,
        ..RunConfig::default()
    };
    cfg.train.epochs = 4;
    cfg.train.learning_rate = 1e-3;
    cfg
}

fn small_synth(n_bags: usize, separation: f64, seed: u64) -> Dataset {
    synth_witness(
        &SynthConfig {
            n_bags,
            cluster_separation: separation,
            ..SynthConfig::default()
        },
        seed,
    )
    .unwrap()
}

fn toy_six() -> Dataset {
    let bags = (0..6)
        .map(|i| {
            let label = i % 2;
            let shift = if label == 1 { 3.0 } else { 0.0 };
            let rows: Vec<[f64; 2]> = (0..3).map(|j| [shift + j as f64 * 0.1, i as f64 * 0.01]).collect();
            Bag::new(format!("b{i}"), label, Matrix::from_rows(&rows)).unwrap()
        })
        .collect();
    Dataset::new("toy", bags, 2).unwrap()
}

#[test]
fn leave_one_out_on_six_bags() {
    let cfg = RunConfig {
        folds: 6,
        repeats: 1,
        ..quick_config()
    };
    let report = crossval(&toy_six(), &cfg, Execution::Serial).unwrap();
    assert_eq!(report.folds.len(), 6);
    assert!(report.folds.iter().all(|f| f.test_bags == 1 && f.train_bags == 5));
    assert!(report.folds.iter().all(|f| f.metrics.accuracy == 0.0 || f.metrics.accuracy == 1.0));
}

#[test]
fn invalid_fold_counts_are_config_errors() {
    let ds = toy_six();
    for folds in [0, 1, 7] {
        let cfg = RunConfig { folds, ..quick_config() };
        assert!(matches!(crossval(&ds, &cfg, Execution::Serial), Err(Error::Config(_))), "{folds}");
    }
    let cfg = RunConfig { repeats: 0, ..quick_config() };
    assert!(matches!(crossval(&ds, &cfg, Execution::Serial), Err(Error::Config(_))));
}

#[test]
fn reports_are_deterministic_and_schedule_independent() {
    let ds = small_synth(24, 4.0, 3);
    let cfg = quick_config();
    let a = crossval(&ds, &cfg, Execution::Serial).unwrap();
    let b = crossval(&ds, &cfg, Execution::Serial).unwrap();
    let c = crossval(&ds, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a.without_timing().to_json(), b.without_timing().to_json());
    assert_eq!(a.without_timing(), c.without_timing());
    assert_eq!(a.folds.len(), cfg.folds * cfg.repeats);
    let order: Vec<(usize, usize)> = a.folds.iter().map(|f| (f.repeat, f.fold)).collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
}

#[test]
fn aggregate_is_recomputable_from_entries() {
    let ds = small_synth(24, 4.0, 5);
    let report = crossval(&ds, &quick_config(), Execution::Serial).unwrap();
    let back = ExperimentReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    let (mean, std) = mean_and_std(&back.accuracies());
    assert_eq!(mean, back.mean_accuracy);
    assert_eq!(std, back.std_accuracy);
}

#[test]
fn extra_repeats_leave_earlier_folds_alone() {
    let ds = small_synth(24, 4.0, 6);
    let one = crossval(&ds, &RunConfig { repeats: 1, ..quick_config() }, Execution::Serial).unwrap();
    let two = crossval(&ds, &RunConfig { repeats: 2, ..quick_config() }, Execution::Serial).unwrap();
    assert_eq!(one.fold_plans[0], two.fold_plans[0]);
    for (x, y) in one.without_timing().folds.iter().zip(&two.without_timing().folds) {
        assert_eq!(x, y);
    }
}

#[test]
fn comparison_is_paired_and_consistent_with_crossval() {
    let ds = small_synth(24, 4.0, 8);
    let cfg = quick_config();
    let kinds = [PoolingKind::Mean, PoolingKind::Max, PoolingKind::Attention];
    let cmp = compare(&ds, &cfg, &kinds, Execution::Serial).unwrap();
    assert_eq!(cmp.reports.len(), 3);
    for r in &cmp.reports[1..] {
        assert_eq!(r.fold_plans, cmp.reports[0].fold_plans);
        let seeds = |r: &ExperimentReport| r.folds.iter().map(|f| f.seed).collect::<Vec<_>>();
        assert_eq!(seeds(r), seeds(&cmp.reports[0]));
    }
    assert_eq!(cmp.summary_table().lines().count(), 4);

    let single = compare(&ds, &cfg, &[PoolingKind::Attention], Execution::Serial).unwrap();
    let direct = crossval(&ds, &cfg, Execution::Serial).unwrap();
    assert_eq!(single.reports[0].without_timing(), direct.without_timing());
    assert_eq!(single.reports[0].fold_plans, fold_plans(&ds, &cfg).unwrap());

    assert!(matches!(compare(&ds, &cfg, &[], Execution::Serial), Err(Error::Config(_))));
}

#[test]
fn report_files_are_written_next_to_each_other() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_synth(24, 4.0, 9);
    let report = crossval(&ds, &quick_config(), Execution::Serial).unwrap();
    let path = dir.path().join("r.json");
    let table = write_report(&report, &path).unwrap();
    let csv = std::fs::read_to_string(table).unwrap();
    assert_eq!(csv.lines().count(), 1 + report.folds.len());
    assert!(csv.starts_with("dataset,pooling,repeat,fold"));
    let json = std::fs::read_to_string(path).unwrap();
    assert_eq!(ExperimentReport::from_json(&json).unwrap(), report);
}

/// Nearest-centroid instance classifier built from the ground-truth instance labels.
fn centroid_oracle_accuracy(ds: &Dataset) -> f64 {
    let d = ds.d_feat;
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for bag in &ds.bags {
        for (row, &l) in bag.instances.iter_rows().zip(bag.instance_labels.as_ref().unwrap()) {
            counts[l as usize] += 1;
            for (s, v) in sums[l as usize].iter_mut().zip(row) {
                *s += v;
            }
        }
    }
    let centroids: Vec<Vec<f64>> = (0..2).map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect()).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let correct = ds
        .bags
        .iter()
        .filter(|bag| {
            let positive = bag.instances.iter_rows().any(|r| dist(r, &centroids[1]) < dist(r, &centroids[0]));
            usize::from(positive) == bag.label
        })
        .count();
    correct as f64 / ds.len() as f64
}

#[test]
fn train_then_eval_on_separable_toy() {
    let ds = synth_witness(
        &SynthConfig {
            n_bags: 40,
            cluster_separation: 10.0,
            ..SynthConfig::default()
        },
        4,
    )
    .unwrap();
    assert_eq!(centroid_oracle_accuracy(&ds), 1.0);

    let mut cfg = RunConfig {
        hidden: vec![32, 16],
        seed: 2,
        ..RunConfig::default()
    };
    cfg.train.learning_rate = 1e-3;
    cfg.train.epochs = 30;
    let (trained, history) = train_full(&ds, &cfg).unwrap();
    assert!(history.final_loss().unwrap() < history.epoch_losses[0]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.model");
    trained.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();
    assert_eq!(loaded.norm, trained.norm);
    assert_eq!(evaluate_dataset(&loaded, &ds).unwrap().accuracy, 1.0);
}

#[test]
fn explain_lists_all_instances_when_top_covers_the_bag() {
    let ds = small_synth(10, 6.0, 10);
    let mut cfg = quick_config();
    cfg.train.epochs = 2;
    let (trained, _) = train_full(&ds, &cfg).unwrap();
    let rows = explain(&trained, &ds, 1000).unwrap();
    assert_eq!(rows.len(), ds.instance_count());
    for bag in &ds.bags {
        let weights: Vec<f64> = rows.iter().filter(|r| r.bag_id == bag.bag_id).map(|r| r.weight).collect();
        assert_eq!(weights.len(), bag.len());
        assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(weights.windows(2).all(|w| w[0] >= w[1]));
    }

    let max_cfg = quick_config().with_pooling(PoolingKind::Max);
    let (max_model, _) = train_full(&ds, &max_cfg).unwrap();
    assert!(matches!(explain(&max_model, &ds, 1), Err(Error::Unsupported(_))));
}

#[test]
fn eval_width_mismatch_names_both_widths() {
    let ds = small_synth(10, 6.0, 11);
    let (trained, _) = train_full(&ds, &quick_config()).unwrap();
    let wide = synth_witness(&SynthConfig { n_bags: 4, d_feat: 13, ..SynthConfig::default() }, 1).unwrap();
    let err = evaluate_dataset(&trained, &wide).unwrap_err();
    assert!(matches!(err, Error::Shape { .. }));
    let msg = err.to_string();
    assert!(msg.contains("10") && msg.contains("13"), "{msg}");
}

#[test]
fn missing_model_file_is_io_error_with_path() {
    let err = TrainedModel::load(std::path::Path::new("/nonexistent/m.model")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/m.model"));
}

#[test]
fn gradcheck_passes_and_detects_a_fault() {
    let cfg = RunConfig::default();
    let checks = gradcheck_all(&cfg, &GradCheckSettings::default(), &PoolingKind::ALL).unwrap();
    for c in &checks {
        assert!(c.passed, "{c:?}");
    }
    let faulty = GradCheckSettings {
        fault: Some(1.5),
        ..GradCheckSettings::default()
    };
    let checks = gradcheck_all(&cfg, &faulty, &PoolingKind::ALL).unwrap();
    assert!(checks.iter().all(|c| !c.passed));
}

fn attnmil() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attnmil"))
}

#[test]
fn binary_exit_status() {
    let ok = attnmil().args(["gradcheck", "--hidden", "16,8"]).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = attnmil().args(["gradcheck", "--hidden", "16,8", "--fault", "2"]).output().unwrap();
    assert!(!bad.status.success());
    let missing = attnmil().args(["crossval", "--data", "/nonexistent.csv"]).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent.csv"));
}

#[test]
fn binary_end_to_end_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    let model = dir.path().join("m.model");
    let report = dir.path().join("cv.json");
    let run = |args: &[&str]| {
        let out = attnmil().args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let p = |p: &std::path::Path| p.to_str().unwrap().to_owned();
    run(&["synth", "--bags", "20", "--seed", "3", "--out", &p(&data)]);
    assert!(dir.path().join("synth.csv.instances.csv").exists());
    let common = ["--data", &p(&data), "--hidden", "16,8", "--epochs", "3", "--lr", "1e-3"];
    run(&[&["crossval"], &common[..], &["--folds", "2", "--repeats", "1", "--out", &p(&report)]].concat());
    assert!(dir.path().join("cv.folds.csv").exists());
    run(&[&["train"], &common[..], &["--out", &p(&model)]].concat());
    assert!(run(&[&["eval"], &common[..], &["--model", &p(&model)]].concat()).contains("accuracy"));
    let explained = run(&[&["explain"], &common[..], &["--model", &p(&model), "--top", "2"]].concat());
    assert_eq!(explained.lines().count(), 1 + 2 * 20);
    let table = run(&[&["compare"], &common[..], &["--folds", "2", "--repeats", "1", "--kinds", "mean,attention"]].concat());
    assert!(table.contains("mean") && table.contains("attention"));
}
