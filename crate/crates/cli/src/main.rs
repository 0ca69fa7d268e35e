//! `crackbench` command-line tool.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 when the data or
//! configuration is invalid or IO fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use crackbench::classify::{calibrate_threshold, ingest_predictions, write_predictions};
use crackbench::enhance::{unsharp_mask, wiener_adaptive};
use crackbench::harness::{
    emit_reports, format_results_csv, generate_synthetic_dataset, run_grid, Dataset, ResultRow,
    MANIFEST_FILE,
};
use crackbench::imagecore::{normalize, save_image};
use crackbench::metrics::{confusion, fmt6, metric_set};
use crackbench::rng::derive_seed;
use crackbench::{
    Classifier, EdgeDensityClassifier, EdgeDensityParams, ExperimentConfig, Image, Method,
    MethodResult, NoiseSpec, UsmParams, WienerParams,
};

#[derive(Parser)]
#[command(
    name = "crackbench",
    version,
    about = "Noise robustness benchmark for crack classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic crack / non-crack dataset
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one noise model to every image of a dataset
    Degrade {
        /// Dataset directory or manifest
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Noise spec as JSON, e.g. {"kind":"salt_pepper","density":0.05,"seed":1}
        #[arg(long)]
        noise: String,
    },
    /// Apply an enhancement filter to every image of a dataset
    Enhance {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        method: Filter,
        /// Filter parameters as JSON; defaults apply when omitted
        #[arg(long)]
        params: Option<String>,
    },
    /// Classify a dataset with the edge-density baseline
    Predict {
        #[arg(long)]
        dataset: PathBuf,
        /// Output predictions CSV
        #[arg(long)]
        out: PathBuf,
        /// Gradient magnitude threshold
        #[arg(long, default_value_t = crackbench::classify::DEFAULT_GRADIENT_THRESHOLD)]
        g: f64,
        /// Edge density threshold; calibrated on the training split when omitted
        #[arg(long)]
        tau: Option<f64>,
        /// Seed of the train / eval split used for calibration
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.7)]
        train_ratio: f64,
    },
    /// Score a predictions CSV against a dataset's labels
    Eval {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Output metrics CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "model")]
        model: String,
        #[arg(long, default_value = "M1")]
        method: Method,
        #[arg(long, default_value = "none")]
        noise: String,
    },
    /// Run the full noise × method grid described by a config file
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Filter {
    Wiener,
    Usm,
}

type ImageFilter = Box<dyn Fn(&Image) -> crackbench::Result<Image>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Synth { n, size, seed, out } => {
            let d = generate_synthetic_dataset(n, size, seed)?;
            d.write(&out)?;
            println!("wrote {} images to {}", d.images.len(), out.display());
        }
        Command::Degrade { input, out, noise } => {
            let spec: NoiseSpec = serde_json::from_str(&noise).context("--noise")?;
            spec.validate()?;
            let dataset = Dataset::load(&input)?;
            let images = dataset
                .manifest
                .entries()
                .iter()
                .zip(&dataset.images)
                .map(|(e, img)| spec.apply_seeded(img, derive_seed(spec.seed(), &e.image_id)))
                .collect::<crackbench::Result<Vec<_>>>()?;
            write_dataset(&dataset, &images, &out)?;
            println!("applied {} to {} images", spec.id(), images.len());
        }
        Command::Enhance {
            input,
            out,
            method,
            params,
        } => {
            let dataset = Dataset::load(&input)?;
            let filter: ImageFilter = match method {
                Filter::Wiener => {
                    let p: WienerParams = parse_params(params.as_deref())?;
                    p.validate()?;
                    Box::new(move |img| wiener_adaptive(img, &p))
                }
                Filter::Usm => {
                    let p: UsmParams = parse_params(params.as_deref())?;
                    p.validate()?;
                    Box::new(move |img| unsharp_mask(img, &p))
                }
            };
            let images = dataset
                .images
                .iter()
                .map(&filter)
                .collect::<crackbench::Result<Vec<_>>>()?;
            write_dataset(&dataset, &images, &out)?;
            println!("enhanced {} images", images.len());
        }
        Command::Predict {
            dataset,
            out,
            g,
            tau,
            seed,
            train_ratio,
        } => {
            let dataset = Dataset::load(&dataset)?;
            let tau = match tau {
                Some(t) => t,
                None => {
                    let split = dataset.manifest.split(train_ratio, seed)?;
                    let (t, acc) = calibrate_threshold(&dataset.labelled(&split.train), g)?;
                    eprintln!(
                        "calibrated tau = {} (train accuracy {})",
                        fmt6(t),
                        fmt6(acc)
                    );
                    t
                }
            };
            let classifier = EdgeDensityClassifier::new(EdgeDensityParams {
                gradient_threshold: g,
                density_threshold: tau,
            })?;
            let preds = dataset
                .manifest
                .entries()
                .iter()
                .zip(&dataset.images)
                .map(|(e, img)| classifier.predict(&e.image_id, &normalize(img)))
                .collect::<crackbench::Result<Vec<_>>>()?;
            write_predictions(&preds, &out)?;
            println!("wrote {} predictions to {}", preds.len(), out.display());
        }
        Command::Eval {
            preds,
            dataset,
            out,
            model,
            method,
            noise,
        } => {
            let manifest = crackbench::DatasetManifest::load(&dataset)?;
            let preds = ingest_predictions(&preds, &manifest)?;
            let metrics = metric_set(&confusion(&preds, &manifest.truth())?)?;
            let result = MethodResult {
                model_id: model,
                method,
                noise_id: noise,
                metrics,
                ct_minutes: preds.iter().map(|p| p.elapsed_ms).sum::<f64>() / 60_000.0,
            };
            let row = ResultRow {
                cc: if metrics.ci > 0.0 { 1.0 } else { 0.0 },
                pct_change_ci: 0.0,
                result,
            };
            let csv = format_results_csv(std::slice::from_ref(&row));
            std::fs::write(&out, &csv).with_context(|| format!("writing {}", out.display()))?;
            print!("{csv}");
        }
        Command::Bench { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = match (out, &cfg.output_dir) {
                (Some(o), _) => o,
                (None, Some(o)) => cfg.resolve(o),
                (None, None) => bail!("no output directory: pass --out or set output_dir"),
            };
            let grid = run_grid(&cfg)?;
            let bundle = emit_reports(&grid.results, &grid.references, &grid.timings, &out)?;
            for (method, tau) in &grid.thresholds {
                eprintln!("{method}: density threshold {}", fmt6(*tau));
            }
            println!(
                "wrote {} result rows and {} files to {}",
                bundle.rows.len(),
                bundle.files.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn parse_params<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> anyhow::Result<T> {
    match json {
        Some(s) => serde_json::from_str(s).context("--params"),
        None => Ok(T::default()),
    }
}

/// Writes `images` under `out` at the manifest's relative paths, plus a copy
/// of the manifest.
fn write_dataset(dataset: &Dataset, images: &[Image], out: &Path) -> anyhow::Result<()> {
    for (e, img) in dataset.manifest.entries().iter().zip(images) {
        let path = out.join(&e.path);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        save_image(img, &path)?;
    }
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, dataset.manifest.to_csv())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
