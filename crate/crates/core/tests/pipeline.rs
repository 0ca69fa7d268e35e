use std::collections::BTreeMap;
use std::path::Path;

use crackbench::classify::{edge_density_score, write_predictions, DEFAULT_GRADIENT_THRESHOLD};
use crackbench::harness::{
    emit_reports, generate_synthetic_dataset, render_reports, run_cell, run_grid, Dataset,
    REFERENCE_NOISE, TIMING_SIDECAR,
};
use crackbench::imagecore::to_gray;
use crackbench::metrics::from_prf;
use crackbench::{
    Classifier, EdgeDensityClassifier, EdgeDensityParams, ExperimentConfig, Label, Method,
    MethodResult, NoiseSpec, Prediction,
};

fn small_config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{
            "dataset": {{"synthetic": {{"n": 24, "size": 64, "seed": 3}}}},
            "noises": [
                {{"kind": "salt_pepper", "density": 0.05, "seed": 1}},
                {{"kind": "motion_blur", "length": 9, "angle_deg": 0, "seed": 1}}
            ],
            "seed": 11{extra}
        }}"#
    ))
    .unwrap()
}

#[test]
fn crack_images_score_higher_on_average() {
    let d = generate_synthetic_dataset(40, 96, 42).unwrap();
    let (mut crack, mut clean) = (Vec::new(), Vec::new());
    for (e, img) in d.manifest.entries().iter().zip(&d.images) {
        let s = edge_density_score(&to_gray(img), DEFAULT_GRADIENT_THRESHOLD).unwrap();
        match e.label {
            Label::Crack => crack.push(s),
            Label::NonCrack => clean.push(s),
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert_eq!(crack.len(), 20);
    assert!(
        mean(&crack) > mean(&clean),
        "{} vs {}",
        mean(&crack),
        mean(&clean)
    );
}

#[test]
fn grid_has_one_row_per_cell_plus_reference() {
    let cfg = small_config("");
    let out = run_grid(&cfg).unwrap();
    assert_eq!(out.results.len(), 3 * 3);
    assert_eq!(out.references.len(), 1);
    assert_eq!(out.references[0].noise_id, REFERENCE_NOISE);
    assert_eq!(out.timings.len(), 10);
    assert!(out.timings.iter().all(|t| t.ct_minutes >= 0.0));
    assert!(out.results.iter().all(|r| r.ct_minutes == 0.0));

    let bundle = render_reports(&out.results, &out.references, &out.timings).unwrap();
    assert_eq!(bundle.file("results.csv").unwrap().lines().count(), 11);
}

#[test]
fn reference_equals_independent_clean_run() {
    let cfg = small_config("");
    let out = run_grid(&cfg).unwrap();
    let d = generate_synthetic_dataset(24, 64, 3).unwrap();
    let dataset = Dataset {
        manifest: d.manifest,
        images: d.images,
    };
    let split = dataset.manifest.split(cfg.train_ratio, cfg.seed).unwrap();
    let tau = out
        .thresholds
        .iter()
        .find(|(m, _)| *m == Method::M1)
        .unwrap()
        .1;
    let c = EdgeDensityClassifier::new(EdgeDensityParams {
        gradient_threshold: DEFAULT_GRADIENT_THRESHOLD,
        density_threshold: tau,
    })
    .unwrap();
    let (r, _) = run_cell(
        &dataset,
        &split.eval,
        &NoiseSpec::None,
        Method::M1,
        &c,
        &cfg,
    )
    .unwrap();
    assert_eq!(r.metrics, out.references[0].metrics);
    let clean_m1 = out
        .results
        .iter()
        .find(|r| r.noise_id == "none" && r.method == Method::M1)
        .unwrap();
    assert_eq!(clean_m1.metrics, out.references[0].metrics);
}

#[test]
fn split_is_deterministic_and_partitions() {
    let d = generate_synthetic_dataset(30, 64, 8).unwrap();
    let a = d.manifest.split(0.7, 5).unwrap();
    assert_eq!(a, d.manifest.split(0.7, 5).unwrap());
    let mut all: Vec<usize> = a.train.iter().chain(&a.eval).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..30).collect::<Vec<_>>());
    assert_ne!(a, d.manifest.split(0.7, 6).unwrap());
}

#[test]
fn table_one_fixture_is_reproduced() {
    let row = |model: &str, p: f64, r: f64, f1: f64| MethodResult {
        model_id: model.into(),
        method: Method::M1,
        noise_id: REFERENCE_NOISE.into(),
        metrics: from_prf(p, r, f1, r),
        ct_minutes: 1.0,
    };
    let refs = [
        row("alexnet", 0.8734, 0.8730, 0.8734),
        row("inception_v3", 0.8472, 0.8467, 0.8469),
        row("resnet101", 0.8730, 0.8600, 0.8664),
    ];
    let results: Vec<MethodResult> = refs
        .iter()
        .map(|r| MethodResult {
            noise_id: "none".into(),
            ..r.clone()
        })
        .collect();
    let md = render_reports(&results, &refs, &[])
        .unwrap()
        .file("report.md")
        .unwrap()
        .to_string();
    assert!(md.contains("| Attribute % | alexnet | inception_v3 | resnet101 |"));
    assert!(md.contains("| Validation (recall) | 87.30 | 84.67 | 86.00 |"));
    assert!(md.contains("| Precision | 87.34 | 84.72 | 87.30 |"));
    assert!(md.contains("| F1 | 87.34 | 84.69 | 86.64 |"));
}

#[test]
fn timing_chart_follows_csv_order() {
    let cfg = small_config("");
    let out = run_grid(&cfg).unwrap();
    let b = render_reports(&out.results, &out.references, &out.timings).unwrap();
    let csv = b.file(TIMING_SIDECAR[0]).unwrap();
    let svg = b.file(TIMING_SIDECAR[1]).unwrap();
    let labels: Vec<String> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit_once(',').unwrap().0.replace(',', "/"))
        .collect();
    let mut pos = 0;
    for l in &labels {
        let at = svg[pos..]
            .find(l.as_str())
            .unwrap_or_else(|| panic!("{l} missing"));
        pos += at + l.len();
    }
}

fn write_cell(dir: &Path, name: &str, preds: &[Prediction]) -> String {
    write_predictions(preds, dir.join(name)).unwrap();
    name.to_string()
}

#[test]
fn external_predictions_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let d = generate_synthetic_dataset(4, 64, 1).unwrap();
    d.write(tmp.path().join("data")).unwrap();
    let perfect: Vec<Prediction> = d
        .manifest
        .entries()
        .iter()
        .map(|e| Prediction {
            image_id: e.image_id.clone(),
            label: e.label,
            score: 0.5,
            elapsed_ms: 30_000.0,
        })
        .collect();
    let mut cells = BTreeMap::new();
    for key in [
        "none/M1",
        "none/M2",
        "salt_pepper_0.05/M1",
        "salt_pepper_0.05/M2",
    ] {
        let file = write_cell(tmp.path(), &key.replace('/', "_"), &perfect);
        cells.insert(key.to_string(), file);
    }
    let models = BTreeMap::from([("net".to_string(), cells.clone())]);
    let json = serde_json::json!({
        "dataset": {"manifest": "data"},
        "noises": [{"kind": "salt_pepper", "density": 0.05, "seed": 1}],
        "methods": ["M1", "M2"],
        "classifier": {"predictions": models},
        "seed": 1
    });
    let cfg_path = tmp.path().join("cfg.json");
    std::fs::write(&cfg_path, json.to_string()).unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let out = run_grid(&cfg).unwrap();
    assert_eq!(out.results.len(), 4);
    for r in out.results.iter().chain(&out.references) {
        assert_eq!(r.metrics.ci, 1.0);
        assert_eq!(r.ct_minutes, 2.0);
    }

    let mut missing = cells;
    missing.remove("salt_pepper_0.05/M2");
    let mut bad = json;
    bad["classifier"]["predictions"]["net"] = serde_json::to_value(missing).unwrap();
    std::fs::write(&cfg_path, bad.to_string()).unwrap();
    let err = ExperimentConfig::load(&cfg_path).unwrap_err().to_string();
    assert!(err.contains("classifier.predictions.net"), "{err}");
    assert!(err.contains("salt_pepper_0.05/M2"), "{err}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = small_config("");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = run_grid(&cfg).unwrap();
        emit_reports(&out.results, &out.references, &out.timings, dir).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !TIMING_SIDECAR.contains(&n.as_str()))
        .collect();
    names.sort();
    assert!(names.len() >= 6);
    for n in names {
        assert_eq!(
            std::fs::read(a.path().join(&n)).unwrap(),
            std::fs::read(b.path().join(&n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn builtin_classifier_is_pure() {
    let d = generate_synthetic_dataset(2, 64, 4).unwrap();
    let c = EdgeDensityClassifier::new(EdgeDensityParams::default()).unwrap();
    let img = crackbench::imagecore::normalize(&d.images[0]);
    let a = c.predict("a", &img).unwrap();
    let b = c.predict("a", &img).unwrap();
    assert_eq!((a.label, a.score), (b.label, b.score));
}
