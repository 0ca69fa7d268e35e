//! The benchmark workflow: datasets, the (noise × method × model) grid and
//! report emission.

mod config;
mod dataset;
mod grid;
mod report;
mod svg;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{
    BuiltinClassifier, ClassifierConfig, DatasetSource, ExperimentConfig, SyntheticSpec,
};
pub use dataset::{Dataset, DatasetManifest, ManifestEntry, Split, MANIFEST_FILE};
pub use grid::{enhance_image, run_cell, run_grid, CellTiming, GridOutcome};
pub use report::{
    emit_reports, format_results_csv, format_timings_csv, render_reports, ReportBundle, ResultRow,
    REFERENCE_NOISE, RESULTS_HEADER, TIMING_SIDECAR,
};
pub use svg::{bar_chart, Bar};
pub use synth::{generate_synthetic_dataset, SyntheticDataset};

/// Evaluation method: classification on the raw image (M1), after adaptive
/// Wiener filtering (M2) or after unsharp masking (M3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    M1,
    M2,
    M3,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::M1, Method::M2, Method::M3];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3 => "M3",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Method::M1 => "no enhancement",
            Method::M2 => "2-D adaptive Wiener filtering",
            Method::M3 => "unsharp masking",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "M1" => Ok(Method::M1),
            "M2" => Ok(Method::M2),
            "M3" => Ok(Method::M3),
            _ => Err(format!("unknown method {s:?}, expected M1, M2 or M3")),
        }
    }
}
