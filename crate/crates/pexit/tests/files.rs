use std::path::Path;
use std::process::Command;

use pexit::config::{ExperimentConfig, Source};
use pexit::experiment::{self, full_features};
use pexit::models::ModelBundle;
use pexit::records::{load_csv, write_csv};
use pexit::tables;
use pexit::Pool;
use pexit_core::cv;
use pexit_core::features::{build_investor_index, feature_matrix};
use pexit_core::forest::ForestParams;
use pexit_core::synth::{generate_synthetic, SyntheticConfig};
use pexit_core::{exec::Serial, sampling, BinaryLabel, LabelMapping};

fn synth(n: usize, seed: u64) -> Vec<pexit_core::CompanyRecord> {
    generate_synthetic(&SyntheticConfig {
        n_companies: n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn records_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let recs = synth(500, 3);
    let p = dir.path().join("r.csv");
    write_csv(&p, &recs).unwrap();
    let back = load_csv(&p).unwrap();
    assert!(back.rejected.is_empty());
    assert_eq!(back.records, recs);
    let p2 = dir.path().join("r2.csv");
    write_csv(&p2, &back.records).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn saved_models_score_bit_identically() {
    let recs = synth(600, 5);
    let labels: Vec<BinaryLabel> = recs.iter().map(|r| r.label(&LabelMapping::default())).collect();
    let index = build_investor_index(&recs);
    let x = feature_matrix(&recs, &index);
    let all: Vec<usize> = (0..recs.len()).collect();
    let balanced = sampling::balance(&all, &labels, 9).unwrap();
    let cfg = ExperimentConfig {
        forest: ForestParams {
            n_trees: 15,
            ..Default::default()
        },
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    for spec in experiment::specs(&cfg, experiment::svm_params(&cfg)) {
        let fitted = cv::fit(&spec, &x, &labels, &balanced, 4, 0, &Serial).unwrap();
        let bundle = ModelBundle {
            index: index.clone(),
            classifier: fitted,
        };
        let path = dir.path().join(format!("{}.txt", spec.name()));
        bundle.save(&path).unwrap();
        let back = ModelBundle::load(&path).unwrap();
        assert_eq!(back, bundle, "{}", spec.name());
        for r in &recs {
            assert_eq!(back.prob(r).to_bits(), bundle.prob(r).to_bits());
        }
    }
}

#[test]
fn corrupt_model_is_rejected() {
    assert!(ModelBundle::from_text("pexit-model 1\nindex 1 1\nscore 2 a\nclassifier lr\n").is_err());
    assert!(ModelBundle::from_text("something else\n").is_err());
    let truncated = "pexit-model 1\nindex 0 0\nclassifier rf\nforest 1 4 1 true 0 19\ntree 0 3\nsplit 0 1.5 2\nleaf 1 0\n";
    assert!(ModelBundle::from_text(truncated).is_err());
    let ok = format!("{truncated}leaf 0 1\n");
    let m = ModelBundle::from_text(&ok).unwrap();
    assert_eq!(ModelBundle::from_text(&m.to_text()).unwrap(), m);
}

fn small_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        seed: 3,
        folds: 4,
        forest: ForestParams {
            n_trees: 20,
            ..Default::default()
        },
        source: Some(Source::Synthetic(SyntheticConfig {
            n_companies: 800,
            seed: 2,
            ..Default::default()
        })),
        out: out.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn outputs_reparse_and_manifest_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.gamma[2] = pexit::GammaChoice::Knee;
    let outcome = pexit::run_experiment(&cfg, &Serial).unwrap();
    outcome.write(dir.path()).unwrap();
    let d = dir.path();
    for (c, name) in ["lr", "rf", "svm"].iter().enumerate() {
        let m = tables::read_metrics(&d.join(format!("metrics_{name}.csv"))).unwrap();
        assert_eq!(m, outcome.metrics[c]);
        assert_eq!(tables::read_roc(&d.join(format!("roc_{name}.csv"))).unwrap(), outcome.rocs[c]);
    }
    assert_eq!(tables::read_metrics(&d.join("metrics_fused.csv")).unwrap(), outcome.fused);
    assert_eq!(
        tables::read_fusion(&d.join("fusion.csv")).unwrap(),
        outcome.fusion.table_row()
    );
    let pred = tables::Predictions::read(&d.join("predictions.csv")).unwrap();
    assert_eq!(pred, outcome.predictions);
    assert_eq!(pred.rows.len(), 800);
    let cum = tables::read_cumvar(&d.join("cumvar.csv")).unwrap();
    assert_eq!(cum.len(), 19);
    assert_eq!(tables::read_summary(&d.join("summary.csv")).unwrap(), outcome.summary);

    // the manifest alone repeats the run
    let again_cfg = ExperimentConfig::load(&d.join("manifest.ini")).unwrap();
    let again = pexit::run_experiment(&again_cfg, &Pool::new(3).unwrap()).unwrap();
    assert_eq!(again.artifacts(), outcome.artifacts());
}

#[test]
fn features_reparse() {
    let dir = tempfile::tempdir().unwrap();
    let recs = synth(50, 1);
    let x = full_features(&recs);
    let labels: Vec<BinaryLabel> = recs.iter().map(|r| r.label(&LabelMapping::default())).collect();
    let p = dir.path().join("f.csv");
    tables::write_features(&p, &x, &labels).unwrap();
    let (x2, l2) = tables::read_features(&p).unwrap();
    assert_eq!(x2, x);
    assert_eq!(l2, labels);
}

fn pexit(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pexit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

#[test]
fn command_line_artifacts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = pexit(&["synth", "--n", "600", "--seed", "7", "--out", "out"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = pexit(&["run", "--mode", "majority", "--trees", "10", "--folds", "3", "--out", "out"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "metrics_lr.csv",
        "metrics_rf.csv",
        "metrics_svm.csv",
        "metrics_fused.csv",
        "roc_lr.csv",
        "roc_rf.csv",
        "roc_svm.csv",
        "cumvar.csv",
        "fusion.csv",
        "manifest.ini",
    ] {
        assert!(d.join("out").join(f).exists(), "{f} missing");
    }
    let manifest = std::fs::read_to_string(d.join("out/manifest.ini")).unwrap();
    assert!(manifest.contains("[experiment]\nseed = 7\n"), "{manifest}");

    let o = pexit(&["fuse", "--predictions", "out/predictions.csv", "--fusion", "unanimity", "--out", "u"], d);
    assert!(o.status.success());
    let maj = tables::read_metrics(&d.join("out/metrics_fused.csv")).unwrap();
    let una = tables::read_metrics(&d.join("u/metrics_fused.csv")).unwrap();
    let (m, u) = (maj.last().unwrap().report, una.last().unwrap().report);
    assert!(u.recl_neg.unwrap() >= m.recl_neg.unwrap());

    assert_eq!(pexit(&["run", "--gamma-lr", "1.5", "--out", "out"], d).status.code(), Some(1));
    assert_eq!(pexit(&["run", "--folds", "1", "--out", "out"], d).status.code(), Some(1));
    assert_eq!(pexit(&["run", "--no-such-flag"], d).status.code(), Some(1));
    assert_eq!(pexit(&["run", "--input", "missing.csv", "--out", "x"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.ini"), "[forest]\ndepth = 2\n").unwrap();
    assert_eq!(pexit(&["run", "--config", "bad.ini"], d).status.code(), Some(1));
    std::fs::write(d.join("bad.csv"), "id,sector\n1,2\n").unwrap();
    assert_eq!(pexit(&["report", "--input", "bad.csv", "--out", "x"], d).status.code(), Some(2));
}
