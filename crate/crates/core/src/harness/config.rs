//! Declarative description of a benchmark run, read from JSON.
//!
//! ```json
//! {
//!   "dataset": {"synthetic": {"n": 200, "size": 128, "seed": 42}},
//!   "noises": [
//!     {"kind": "salt_pepper", "density": 0.05, "seed": 42},
//!     {"kind": "motion_blur", "length": 9, "angle_deg": 0}
//!   ],
//!   "methods": ["M1", "M2", "M3"],
//!   "wiener": {"window": [3, 3], "noise_variance": null},
//!   "usm": {"sigma": 1.0, "lambda": 0.8},
//!   "classifier": {"builtin": {"gradient_threshold": 0.25}},
//!   "resize": [128, 128],
//!   "seed": 42
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Method;
use crate::enhance::{UsmParams, WienerParams};
use crate::noise::NoiseSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Degradations to evaluate; the clean condition is always added.
    #[serde(default)]
    pub noises: Vec<NoiseSpec>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub wiener: WienerParams,
    #[serde(default)]
    pub usm: UsmParams,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    /// Classifier input `[width, height]`; images keep their size when absent.
    #[serde(default)]
    pub resize: Option<[usize; 2]>,
    /// Divide by the per-channel standard deviation after mean-centering.
    #[serde(default)]
    pub normalize_variance: bool,
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Put measured wall time into `results.csv` and the efficiency index.
    /// Off by default: those files then stay byte-reproducible and wall
    /// time only appears in the timing sidecar.
    #[serde(default)]
    pub report_wall_time: bool,
    /// Directory relative paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_train_ratio() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Path to a `manifest.csv` or the directory holding one.
    Manifest(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Builtin(BuiltinClassifier),
    /// Prediction CSVs per model, keyed by `"<noise id>/<method>"`
    /// (for example `"salt_pepper_0.05/M2"`). The `"none/M1"` file doubles
    /// as the reference run.
    Predictions(BTreeMap<String, BTreeMap<String, PathBuf>>),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Builtin(BuiltinClassifier::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinClassifier {
    #[serde(default = "default_gradient_threshold")]
    pub gradient_threshold: f64,
    /// Fixed density threshold; calibrated on the clean training split when absent.
    #[serde(default)]
    pub density_threshold: Option<f64>,
}

fn default_gradient_threshold() -> f64 {
    crate::classify::DEFAULT_GRADIENT_THRESHOLD
}

impl Default for BuiltinClassifier {
    fn default() -> Self {
        Self {
            gradient_threshold: default_gradient_threshold(),
            density_threshold: None,
        }
    }
}

pub fn cell_key(noise_id: &str, method: Method) -> String {
    format!("{noise_id}/{method}")
}

impl ExperimentConfig {
    /// Parses and validates a config file; relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            at: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |at: String, e: Error| Error::Config {
            at,
            msg: match e {
                Error::InvalidInput(m) => m,
                other => other.to_string(),
            },
        };
        if self.methods.is_empty() {
            return Err(bad(
                "methods".into(),
                Error::invalid("at least one method is required"),
            ));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(bad(
                    format!("methods[{i}]"),
                    Error::invalid(format!("{m} listed twice")),
                ));
            }
        }
        for (i, n) in self.noises.iter().enumerate() {
            n.validate().map_err(|e| bad(format!("noises[{i}]"), e))?;
            if self.noises[..i].iter().any(|o| o.id() == n.id()) {
                return Err(bad(
                    format!("noises[{i}]"),
                    Error::invalid(format!("noise {} listed twice", n.id())),
                ));
            }
        }
        self.wiener
            .validate()
            .map_err(|e| bad("wiener".into(), e))?;
        self.usm.validate().map_err(|e| bad("usm".into(), e))?;
        if let Some([w, h]) = self.resize {
            if w == 0 || h == 0 {
                return Err(bad(
                    "resize".into(),
                    Error::invalid("resize target must be positive"),
                ));
            }
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(bad(
                "train_ratio".into(),
                Error::invalid(format!(
                    "train ratio {} must lie in (0, 1)",
                    self.train_ratio
                )),
            ));
        }
        if let DatasetSource::Synthetic(s) = &self.dataset {
            if s.n < 2 || s.n % 2 != 0 || s.size < 64 {
                return Err(bad(
                    "dataset.synthetic".into(),
                    Error::invalid("synthetic datasets need an even n >= 2 and size >= 64"),
                ));
            }
        }
        match &self.classifier {
            ClassifierConfig::Builtin(b) => {
                if !(b.gradient_threshold > 0.0 && b.gradient_threshold.is_finite()) {
                    return Err(bad(
                        "classifier.builtin.gradient_threshold".into(),
                        Error::invalid("gradient threshold must be positive"),
                    ));
                }
                if let Some(t) = b.density_threshold {
                    if !(0.0..=1.0).contains(&t) {
                        return Err(bad(
                            "classifier.builtin.density_threshold".into(),
                            Error::invalid("density threshold must lie in [0, 1]"),
                        ));
                    }
                }
            }
            ClassifierConfig::Predictions(models) => {
                if models.is_empty() {
                    return Err(bad(
                        "classifier.predictions".into(),
                        Error::invalid("at least one model is required"),
                    ));
                }
                for (model, cells) in models {
                    let at = format!("classifier.predictions.{model}");
                    if !crate::classify::valid_image_id(model) {
                        return Err(bad(at, Error::invalid("model ids use [A-Za-z0-9_.-]")));
                    }
                    for key in self.cell_keys() {
                        if !cells.contains_key(&key) {
                            return Err(bad(
                                at.clone(),
                                Error::invalid(format!("missing predictions for cell {key}")),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Noise conditions in evaluation order, clean first.
    pub fn noise_conditions(&self) -> Vec<NoiseSpec> {
        let mut out = vec![NoiseSpec::None];
        out.extend(self.noises.iter().filter(|n| !n.is_none()).cloned());
        out
    }

    /// Every `"<noise id>/<method>"` key the grid needs, reference included.
    pub fn cell_keys(&self) -> Vec<String> {
        let mut keys = vec![cell_key("none", Method::M1)];
        for n in self.noise_conditions() {
            for m in &self.methods {
                let k = cell_key(&n.id(), *m);
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        keys
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
