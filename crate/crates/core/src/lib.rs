//! Noise robustness benchmarking for binary crack / non-crack image
//! classification.
//!
//! The crate is organised along the benchmark pipeline:
//!
//! * [`imagecore`] – the [`Image`] raster, PGM/PPM IO, resizing, grayscale
//!   conversion and mean-centering.
//! * [`noise`] – seeded salt & pepper noise, motion-blur kernels and 2-D
//!   correlation.
//! * [`enhance`] – the 2-D adaptive Wiener filter and unsharp masking.
//! * [`classify`] – the classifier contract, a Sobel edge-density baseline
//!   and ingestion of external prediction files.
//! * [`metrics`] – confusion matrices, precision / recall / F1, the
//!   comparative index and the computational efficiency index.
//! * [`harness`] – dataset manifests, the synthetic dataset generator, the
//!   (noise × method × model) grid runner and report emission.

pub mod classify;
pub mod enhance;
mod error;
pub mod harness;
pub mod imagecore;
pub mod metrics;
pub mod noise;
pub mod rng;

pub use classify::{Classifier, EdgeDensityClassifier, EdgeDensityParams, Label, Prediction};
pub use enhance::{LocalStats, UsmParams, WienerParams};
pub use error::{Error, Result};
pub use harness::{DatasetManifest, ExperimentConfig, Method, ReportBundle};
pub use imagecore::{Image, NormalizedImage};
pub use metrics::{ConfusionMatrix, EfficiencyTable, MethodResult, MetricSet};
pub use noise::{Kernel, NoiseSpec};
