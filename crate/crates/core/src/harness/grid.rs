//! The grid runner: degrade → enhance → resize + normalize → classify →
//! score, for every (noise, method) cell plus a clean reference cell.

use std::time::Instant;

use super::config::{cell_key, ClassifierConfig, DatasetSource, ExperimentConfig};
use super::dataset::Dataset;
use super::synth::generate_synthetic_dataset;
use super::Method;
use crate::classify::{
    best_threshold, ingest_predictions, Classifier, EdgeDensityClassifier, EdgeDensityParams,
    Prediction,
};
use crate::enhance::{unsharp_mask, wiener_adaptive};
use crate::imagecore::{normalize_with, resize_bilinear, Image, NormalizeOptions, NormalizedImage};
use crate::metrics::{confusion, metric_set, MethodResult};
use crate::noise::NoiseSpec;
use crate::rng::derive_seed;
use crate::Result;

/// Wall time of one grid cell, kept apart from the reproducible reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTiming {
    pub model_id: String,
    pub method: Method,
    pub noise_id: String,
    pub ct_minutes: f64,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// Clean, unfiltered M1 run per model.
    pub references: Vec<MethodResult>,
    /// One row per (model, noise, method) cell.
    pub results: Vec<MethodResult>,
    pub timings: Vec<CellTiming>,
    /// Calibrated density threshold per method (built-in classifier only).
    pub thresholds: Vec<(Method, f64)>,
}

pub fn enhance_image(img: &Image, method: Method, cfg: &ExperimentConfig) -> Result<Image> {
    match method {
        Method::M1 => Ok(img.clone()),
        Method::M2 => wiener_adaptive(img, &cfg.wiener),
        Method::M3 => unsharp_mask(img, &cfg.usm),
    }
}

fn preprocess(img: &Image, cfg: &ExperimentConfig) -> Result<NormalizedImage> {
    let sized = match cfg.resize {
        Some([w, h]) => resize_bilinear(img, w, h)?,
        None => img.clone(),
    };
    Ok(normalize_with(
        &sized,
        NormalizeOptions {
            scale_variance: cfg.normalize_variance,
        },
    ))
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetSource::Manifest(p) => Dataset::load(cfg.resolve(p)),
        DatasetSource::Synthetic(s) => {
            let d = generate_synthetic_dataset(s.n, s.size, s.seed)?;
            Ok(Dataset {
                manifest: d.manifest,
                images: d.images,
            })
        }
    }
}

/// Runs one cell of the grid with the given classifier. The returned
/// result's `ct_minutes` is the measured wall time of the cell.
pub fn run_cell(
    dataset: &Dataset,
    eval: &[usize],
    noise: &NoiseSpec,
    method: Method,
    classifier: &dyn Classifier,
    cfg: &ExperimentConfig,
) -> Result<(MethodResult, Vec<Prediction>)> {
    let start = Instant::now();
    let mut preds = Vec::with_capacity(eval.len());
    for &i in eval {
        let id = &dataset.manifest.entries()[i].image_id;
        let noisy = noise.apply_seeded(&dataset.images[i], derive_seed(noise.seed(), id))?;
        let enhanced = enhance_image(&noisy, method, cfg)?;
        preds.push(classifier.predict(id, &preprocess(&enhanced, cfg)?)?);
    }
    let ct_minutes = start.elapsed().as_secs_f64() / 60.0;
    let cm = confusion(&preds, &dataset.manifest.truth())?;
    Ok((
        MethodResult {
            model_id: classifier.id().to_string(),
            method,
            noise_id: noise.id(),
            metrics: metric_set(&cm)?,
            ct_minutes,
        },
        preds,
    ))
}

/// Runs the whole grid described by `cfg`. Nothing is written to disk.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutcome> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    match &cfg.classifier {
        ClassifierConfig::Builtin(b) => {
            run_builtin(cfg, &dataset, b.gradient_threshold, b.density_threshold)
        }
        ClassifierConfig::Predictions(_) => run_external(cfg, &dataset),
    }
}

fn run_builtin(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    gradient_threshold: f64,
    fixed_threshold: Option<f64>,
) -> Result<GridOutcome> {
    let split = dataset.manifest.split(cfg.train_ratio, cfg.seed)?;

    // Each method gets a threshold fitted to clean training images passed
    // through that method's own enhancement.
    let mut methods = cfg.methods.clone();
    if !methods.contains(&Method::M1) {
        methods.insert(0, Method::M1);
    }
    let mut classifiers = Vec::new();
    let mut thresholds = Vec::new();
    for &method in &methods {
        let density_threshold = match fixed_threshold {
            Some(t) => t,
            None => {
                let probe = EdgeDensityClassifier::new(EdgeDensityParams {
                    gradient_threshold,
                    density_threshold: 0.0,
                })?;
                let scored = split
                    .train
                    .iter()
                    .map(|&i| {
                        let e = &dataset.manifest.entries()[i];
                        let img =
                            preprocess(&enhance_image(&dataset.images[i], method, cfg)?, cfg)?;
                        Ok((probe.predict(&e.image_id, &img)?.score, e.label))
                    })
                    .collect::<Result<Vec<_>>>()?;
                best_threshold(&scored)?.0
            }
        };
        let mut c = EdgeDensityClassifier::new(EdgeDensityParams {
            gradient_threshold,
            density_threshold,
        })?;
        if let Some([w, h]) = cfg.resize {
            c = c.with_input_size(w, h);
        }
        thresholds.push((method, density_threshold));
        classifiers.push((method, c));
    }
    let classifier_for = |m: Method| &classifiers.iter().find(|(k, _)| *k == m).unwrap().1;

    let canonical = |mut r: MethodResult| {
        if !cfg.report_wall_time {
            r.ct_minutes = 0.0;
        }
        r
    };
    let timing = |r: &MethodResult| CellTiming {
        model_id: r.model_id.clone(),
        method: r.method,
        noise_id: r.noise_id.clone(),
        ct_minutes: r.ct_minutes,
    };

    let mut timings = Vec::new();
    let (reference, _) = run_cell(
        dataset,
        &split.eval,
        &NoiseSpec::None,
        Method::M1,
        classifier_for(Method::M1),
        cfg,
    )?;
    let mut reference = reference;
    reference.noise_id = super::REFERENCE_NOISE.to_string();
    timings.push(timing(&reference));

    let mut results = Vec::new();
    for noise in cfg.noise_conditions() {
        for &method in &cfg.methods {
            let (r, _) = run_cell(
                dataset,
                &split.eval,
                &noise,
                method,
                classifier_for(method),
                cfg,
            )?;
            timings.push(timing(&r));
            results.push(canonical(r));
        }
    }
    thresholds.retain(|(m, _)| cfg.methods.contains(m) || *m == Method::M1);
    Ok(GridOutcome {
        references: vec![canonical(reference)],
        results,
        timings,
        thresholds,
    })
}

fn run_external(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<GridOutcome> {
    let ClassifierConfig::Predictions(models) = &cfg.classifier else {
        unreachable!("checked by caller");
    };
    let truth = dataset.manifest.truth();
    let score = |model: &str, method: Method, noise_id: &str| -> Result<MethodResult> {
        let path = &models[model][&cell_key(noise_id, method)];
        let preds = ingest_predictions(cfg.resolve(path), &dataset.manifest)?;
        let cm = confusion(&preds, &truth)?;
        Ok(MethodResult {
            model_id: model.to_string(),
            method,
            noise_id: noise_id.to_string(),
            metrics: metric_set(&cm)?,
            ct_minutes: preds.iter().map(|p| p.elapsed_ms).sum::<f64>() / 60_000.0,
        })
    };

    let mut references = Vec::new();
    let mut results = Vec::new();
    for model in models.keys() {
        let mut r = score(model, Method::M1, "none")?;
        r.noise_id = super::REFERENCE_NOISE.to_string();
        references.push(r);
        for noise in cfg.noise_conditions() {
            for &method in &cfg.methods {
                results.push(score(model, method, &noise.id())?);
            }
        }
    }
    let timings = references
        .iter()
        .chain(&results)
        .map(|r| CellTiming {
            model_id: r.model_id.clone(),
            method: r.method,
            noise_id: r.noise_id.clone(),
            ct_minutes: r.ct_minutes,
        })
        .collect();
    Ok(GridOutcome {
        references,
        results,
        timings,
        thresholds: Vec::new(),
    })
}
