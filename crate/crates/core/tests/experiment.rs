#![allow(clippy::needless_range_loop)]

use std::path::Path;

use earlywarn_core::baseline::{DistanceMetric, HyperGrid};
use earlywarn_core::data::{impute_missing, round_grades, select_midpoint_features, LabelClass};
use earlywarn_core::experiment::{
    export_pca, generate_synthetic, pca_points, run_experiment, write_gradebook_csv, ClassProfile,
    DatasetSource, ExperimentConfig, ModelSpec, RunStatus, SyntheticSpec,
};
use earlywarn_core::nn::{CnnSpec, LstmSpec};
use earlywarn_core::Error;
use proptest::prelude::*;

fn spec(n: usize, mix: [f64; 3], means: [f64; 3], spread: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_students: n,
        class_mix: mix,
        n_assessments: 10,
        midpoint_count: 6,
        profiles: means.map(|m| ClassProfile {
            means: vec![m],
            spread,
        }),
        noise_std: 5.0,
        seed,
    }
}

fn small_config(out: &Path) -> ExperimentConfig {
    let cnn = CnnSpec {
        conv_filters: 8,
        dense_units: 16,
        epochs: 40,
        ..CnnSpec::default()
    };
    let lstm = LstmSpec {
        hidden_units: 8,
        epochs: 120,
        ..LstmSpec::default()
    };
    ExperimentConfig {
        name: "separable".into(),
        seed: 11,
        dataset: DatasetSource::Synthetic {
            spec: spec(90, [0.4, 0.35, 0.25], [85.0, 60.0, 35.0], 6.0, 3),
        },
        split: Default::default(),
        models: vec![
            ModelSpec::Cnn(cnn),
            ModelSpec::Lstm(lstm),
            ModelSpec::Baseline(HyperGrid::Knn {
                k: vec![1, 3, 5],
                metric: vec![DistanceMetric::Euclidean],
            }),
        ],
        cv_folds: 3,
        output_dir: out.to_path_buf(),
        base_dir: Default::default(),
    }
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_table_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_experiment(&small_config(&tmp.path().join("a"))).unwrap();
    assert_eq!(a.reports.len(), 3);
    let lines: Vec<&str> = a.table.lines().collect();
    assert_eq!(lines.len(), 5);
    for (line, name) in lines[2..].iter().zip(["CNN", "RNN-LSTM", "Optimized K-NN"]) {
        assert!(line.starts_with(&format!("| {name}")));
        assert_eq!(line.matches('.').count(), 4, "four metric cells in {line}");
    }
    for r in &a.reports {
        assert!(
            r.metrics.accuracy >= 0.9,
            "{}: {}",
            r.model_name,
            r.metrics.accuracy
        );
    }
    assert!(a.grid_results[2].is_some() && a.grid_results[0].is_none());
    assert_eq!(a.manifest.status, RunStatus::Ok);
    for f in [
        "pca.csv",
        "scaler.json",
        "comparison.txt",
        "comparison.json",
        "models/00_cnn.json",
        "grid/02_knn.json",
        "reports/01_lstm.json",
        "data/test_scaled.csv",
    ] {
        assert!(a.manifest.files.contains_key(f), "{f}");
    }

    let b = run_experiment(&small_config(&tmp.path().join("b"))).unwrap();
    assert_eq!(a.manifest_hash, b.manifest_hash);
    assert_eq!(read_tree(&a.output_dir), read_tree(&b.output_dir));

    let mut other = small_config(&tmp.path().join("c"));
    other.seed = 12;
    let c = run_experiment(&other).unwrap();
    assert_ne!(c.manifest.config_hash, a.manifest.config_hash);
}

#[test]
fn missing_csv_fails_in_load_stage_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(&tmp.path().join("out"));
    cfg.dataset = DatasetSource::Csv {
        path: tmp.path().join("absent.csv"),
        schema: earlywarn_core::experiment::SchemaSource::Inline(
            spec(10, [1.0, 0.0, 0.0], [80.0; 3], 1.0, 0).schema(),
        ),
    };
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(&err, Error::Stage { stage, .. } if stage == "load"));
    assert_eq!(err.kind(), earlywarn_core::ErrorKind::Data);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["status"], "failed");
    assert_eq!(manifest["failure"]["stage"], "load");
}

#[test]
fn csv_source_matches_synthetic_source() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec(60, [0.5, 0.3, 0.2], [85.0, 60.0, 35.0], 6.0, 9);
    let table = generate_synthetic(&s).unwrap();
    let mut buf = Vec::new();
    write_gradebook_csv(&table, &mut buf).unwrap();
    std::fs::write(tmp.path().join("g.csv"), buf).unwrap();
    std::fs::write(
        tmp.path().join("s.json"),
        serde_json::to_string(&s.schema()).unwrap(),
    )
    .unwrap();

    let knn = ModelSpec::Baseline(HyperGrid::Knn {
        k: vec![3],
        metric: vec![DistanceMetric::Euclidean],
    });
    let text = format!(
        r#"{{"seed": 1, "dataset": {{"source": "csv", "path": "g.csv", "schema": "s.json"}},
            "models": [{}], "cv_folds": 3, "output_dir": "out"}}"#,
        serde_json::to_string(&knn).unwrap()
    );
    let cfg_path = tmp.path().join("cfg.json");
    std::fs::write(&cfg_path, text).unwrap();
    let from_csv = run_experiment(&ExperimentConfig::from_file(&cfg_path).unwrap()).unwrap();
    assert_eq!(from_csv.manifest.inputs.len(), 2);

    let mut synth = ExperimentConfig::from_file(&cfg_path).unwrap();
    synth.dataset = DatasetSource::Synthetic { spec: s };
    synth.output_dir = "out2".into();
    let from_spec = run_experiment(&synth).unwrap();
    assert_eq!(from_csv.reports, from_spec.reports);
    assert_eq!(
        std::fs::read(tmp.path().join("out/data/features.csv")).unwrap(),
        std::fs::read(tmp.path().join("out2/data/features.csv")).unwrap()
    );
}

#[test]
fn pca_separates_three_clusters() {
    let table = generate_synthetic(&spec(150, [1.0 / 3.0; 3], [85.0, 60.0, 35.0], 5.0, 4)).unwrap();
    let fm = select_midpoint_features(&round_grades(&impute_missing(&table))).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pca.csv");
    export_pca(&fm, &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), fm.n_rows() + 1);

    let (_, pts) = pca_points(&fm).unwrap();
    let mut centroid = [[0.0; 2]; 3];
    let counts = fm.class_counts();
    for (row, l) in pts.iter_rows().zip(fm.labels()) {
        centroid[l.index()][0] += row[0] / counts[l.index()] as f64;
        centroid[l.index()][1] += row[1] / counts[l.index()] as f64;
    }
    let mut within: f64 = 0.0;
    for c in 0..3 {
        let members: Vec<&[f64]> = pts
            .iter_rows()
            .zip(fm.labels())
            .filter(|(_, l)| l.index() == c)
            .map(|(r, _)| r)
            .collect();
        let var = members
            .iter()
            .map(|r| (r[0] - centroid[c][0]).powi(2) + (r[1] - centroid[c][1]).powi(2))
            .sum::<f64>()
            / members.len() as f64;
        within = within.max(var.sqrt());
    }
    for a in 0..3 {
        for b in a + 1..3 {
            let d = ((centroid[a][0] - centroid[b][0]).powi(2)
                + (centroid[a][1] - centroid[b][1]).powi(2))
            .sqrt();
            assert!(d > within, "classes {a},{b}: {d} vs {within}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthetic_mix_within_one_student(
        n in 30usize..300, g in 0.2f64..0.8, f_share in 0.2f64..0.8, seed in any::<u64>(),
    ) {
        let f = (1.0 - g) * f_share;
        let mix = [g, f, 1.0 - g - f];
        let s = spec(n, mix, [80.0, 60.0, 40.0], 12.0, seed);
        let table = generate_synthetic(&s).unwrap();
        let fm = select_midpoint_features(&round_grades(&impute_missing(&table))).unwrap();
        for c in LabelClass::ALL {
            let want = mix[c.index()] * n as f64;
            prop_assert!((fm.class_counts()[c.index()] as f64 - want).abs() <= 1.0);
        }
    }
}
