//! End-to-end scenario runs on synthetic images: correctness of the
//! plumbing, determinism of the artifacts, and report emission.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use splinet_fda::idx::write_idx_pair;
use splinet_fda::imaging::GrayImage;
use splinet_fda::pipeline::{
    ingest, run_scenario, PipelineConfig, RunArtifacts, Scenario, SplitConfig,
};
use splinet_fda::report::report;
use std::path::Path;

/// Ten classes of 16x16 images: a bright blob whose position and size are
/// class-specific, plus pixel noise.
fn synthetic_images(count_per_class: usize, seed: u64) -> (Vec<GrayImage>, Vec<usize>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for class in 0..10usize {
        let (cy, cx) = ((class / 4) * 5 + 3, (class % 4) * 4 + 2);
        let radius = 1.5 + 0.35 * (class % 3) as f64;
        for _ in 0..count_per_class {
            let jitter_y = rng.gen::<f64>() - 0.5;
            let jitter_x = rng.gen::<f64>() - 0.5;
            let mut values = Vec::with_capacity(256);
            for i in 0..16 {
                for j in 0..16 {
                    let dy = i as f64 - cy as f64 - jitter_y;
                    let dx = j as f64 - cx as f64 - jitter_x;
                    let blob = (-(dy * dy + dx * dx) / (2.0 * radius * radius)).exp();
                    let noise = 0.05 * rng.gen::<f64>();
                    values.push((blob + noise).clamp(0.0, 1.0));
                }
            }
            images.push(GrayImage::new(16, 16, values));
            labels.push(class);
        }
    }
    (images, labels)
}

fn write_dataset(dir: &Path) -> PipelineConfig {
    let (train_images, train_labels) = synthetic_images(60, 1);
    let (test_images, test_labels) = synthetic_images(40, 2);
    let ti = dir.join("train-images.idx");
    let tl = dir.join("train-labels.idx");
    let vi = dir.join("test-images.idx");
    let vl = dir.join("test-labels.idx");
    write_idx_pair(&ti, &tl, &train_images, &train_labels).unwrap();
    write_idx_pair(&vi, &vl, &test_images, &test_labels).unwrap();
    let mut config = PipelineConfig::default();
    config.data.train_images = Some(ti);
    config.data.train_labels = Some(tl);
    config.data.test_images = Some(vi);
    config.data.test_labels = Some(vl);
    config.knot_budget = 40;
    config.splits = SplitConfig {
        train_per_class: 60,
        val_per_class: 20,
        test_per_class: 20,
        val_fraction: 0.5,
    };
    config.seed = 99;
    config
}

fn strip_timestamp(artifacts: &RunArtifacts) -> String {
    let mut value = serde_json::to_value(artifacts).unwrap();
    value["provenance"]["created_unix"] = serde_json::json!(0);
    serde_json::to_string(&value).unwrap()
}

#[test]
fn scenarios_run_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let base = write_dataset(dir.path());

    // ingest shapes
    let data = ingest(&base).unwrap();
    assert_eq!(data.train.arguments.len(), 256);
    for c in 0..10 {
        assert_eq!(data.train.per_class[c].nrows(), 60);
        assert_eq!(data.val.per_class[c].nrows(), 20);
        assert_eq!(data.test.per_class[c].nrows(), 20);
    }

    for scenario in [Scenario::S1, Scenario::S2, Scenario::S3] {
        let mut config = base.clone();
        config.scenario = scenario;
        let artifacts = run_scenario(&config).unwrap();
        assert_eq!(artifacts.classes.len(), 10);
        for class in &artifacts.classes {
            assert_eq!(class.centered_selection.knots.internal_count(), 40);
            // n - k + 1 with n = 40 internal knots, k = 3
            assert_eq!(class.model.dim(), 38);
        }
        let acc = artifacts.test_report.overall_accuracy;
        assert!(
            acc >= 0.8,
            "{scenario:?}: synthetic blobs should classify well, got {acc}"
        );
    }

    // byte-level determinism modulo the timestamp
    let mut config = base.clone();
    config.scenario = Scenario::S1;
    let a = run_scenario(&config).unwrap();
    let b = run_scenario(&config).unwrap();
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
}

#[test]
fn mean_knots_nest_in_centered_and_reports_render() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = write_dataset(dir.path());
    config.scenario = Scenario::S1;
    config.cache_dir = Some(dir.path().join("cache"));

    let artifacts = run_scenario(&config).unwrap();
    for class in &artifacts.classes {
        let centered = class.centered_selection.knots.values();
        for v in class.mean_selection.knots.values() {
            assert!(centered.contains(v), "mean knot {v} missing");
        }
    }

    // knot-stage cache: a second run must reuse the stored selections
    let cache_files: Vec<_> = std::fs::read_dir(dir.path().join("cache"))
        .unwrap()
        .collect();
    assert!(!cache_files.is_empty());
    let again = run_scenario(&config).unwrap();
    assert_eq!(strip_timestamp(&artifacts), strip_timestamp(&again));

    // reports: emitted, deterministic, failing cleanly on missing artifacts
    let out1 = dir.path().join("report1");
    let out2 = dir.path().join("report2");
    report(&artifacts, &out1).unwrap();
    report(&artifacts, &out2).unwrap();
    for name in [
        "confusion_test.txt",
        "metrics_test.tsv",
        "eigen_counts.tsv",
        "search_trajectory.tsv",
        "knots_class_0.tsv",
        "scree_class_9.tsv",
    ] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} is not deterministic");
    }

    let mut broken = artifacts.clone();
    broken.classes.clear();
    assert!(report(&broken, &dir.path().join("report3")).is_err());

    // artifacts save/load round trip
    let run_dir = dir.path().join("run");
    artifacts.save(&run_dir).unwrap();
    let loaded = RunArtifacts::load(&run_dir).unwrap();
    assert_eq!(strip_timestamp(&artifacts), strip_timestamp(&loaded));
}

#[test]
fn s3_rejects_ddk_section_and_csv_ingest_works() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = write_dataset(dir.path());
    config.scenario = Scenario::S3;
    config.ddk = Some(splinet_fda::pipeline::DdkConfig::default());
    assert!(matches!(
        run_scenario(&config),
        Err(splinet_fda::FdaError::Config(_))
    ));

    // tiny CSV ingest: 3 rows, labels preserved
    let csv = dir.path().join("tiny.csv");
    let mut text = String::from("label");
    for i in 0..16 {
        text.push_str(&format!(",p{i}"));
    }
    text.push('\n');
    for (label, base) in [(0usize, 10u8), (1, 200), (0, 60)] {
        text.push_str(&label.to_string());
        for i in 0..16 {
            text.push_str(&format!(",{}", base as usize + i));
        }
        text.push('\n');
    }
    std::fs::write(&csv, text).unwrap();
    let (images, labels) = splinet_fda::idx::read_csv_images(&csv).unwrap();
    assert_eq!(labels, vec![0, 1, 0]);
    assert_eq!(images.len(), 3);
    assert_eq!(images[0].height(), 4);
}
