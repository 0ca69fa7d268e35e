//! Scoring: confusion counts, precision / recall / F1, the comparative
//! index CI (mean of the three), percent change against a reference and
//! the computational efficiency index Cc.

use std::collections::{HashMap, HashSet};

use crate::classify::{Label, Prediction};
use crate::harness::Method;
use crate::{Error, Result};

/// Binary confusion counts with `Crack` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Crack, Label::Crack) => self.tp += 1,
            (Label::Crack, Label::NonCrack) => self.fp += 1,
            (Label::NonCrack, Label::Crack) => self.fn_ += 1,
            (Label::NonCrack, Label::NonCrack) => self.tn += 1,
        }
    }

    /// The same counts with `NonCrack` taken as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

/// Tallies predictions against ground truth.
pub fn confusion(preds: &[Prediction], truth: &HashMap<String, Label>) -> Result<ConfusionMatrix> {
    let mut seen = HashSet::with_capacity(preds.len());
    let mut cm = ConfusionMatrix::default();
    for p in preds {
        let actual = truth
            .get(&p.image_id)
            .ok_or_else(|| Error::invalid(format!("no ground truth for {:?}", p.image_id)))?;
        if !seen.insert(p.image_id.as_str()) {
            return Err(Error::invalid(format!(
                "duplicate prediction for {:?}",
                p.image_id
            )));
        }
        cm.record(p.label, *actual);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Mean of precision, recall and F1.
    pub ci: f64,
}

/// Zero denominators yield 0 rather than 1.
pub fn metric_set(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let accuracy = ratio(cm.tp + cm.tn, total);
    Ok(from_prf(
        precision,
        recall,
        f1_score(precision, recall),
        accuracy,
    ))
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn comparative_index(precision: f64, recall: f64, f1: f64) -> f64 {
    (precision + recall + f1) / 3.0
}

/// Builds a metric set from already-computed rates (for published figures).
pub fn from_prf(precision: f64, recall: f64, f1: f64, accuracy: f64) -> MetricSet {
    MetricSet {
        precision,
        recall,
        f1,
        accuracy,
        ci: comparative_index(precision, recall, f1),
    }
}

/// `100 · (value − reference) / reference`.
pub fn percent_change(value: f64, reference: f64) -> Result<f64> {
    if reference <= 0.0 {
        return Err(Error::invalid(format!(
            "percent change needs a positive reference, got {reference}"
        )));
    }
    Ok(100.0 * (value - reference) / reference)
}

/// Metrics and compute time of one (model, method, noise) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub model_id: String,
    pub method: Method,
    pub noise_id: String,
    pub metrics: MetricSet,
    pub ct_minutes: f64,
}

impl MethodResult {
    pub fn sort_key(&self) -> (&str, Method, &str) {
        (&self.model_id, self.method, &self.noise_id)
    }
}

/// Compute time below which every method counts as equally fast.
pub const CT_FLOOR_MINUTES: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyTable {
    pub rows: Vec<MethodResult>,
    /// Efficiency index per row, aligned with `rows`.
    pub cc: Vec<f64>,
}

impl EfficiencyTable {
    pub fn best(&self) -> Option<&MethodResult> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in self.cc.iter().enumerate() {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        best.map(|(i, _)| &self.rows[i])
    }
}

/// Accuracy per minute of compute, normalised so the best row scores 1:
/// `cc_i = (ci_i / max(ct_i, 1)) / max_j (ci_j / max(ct_j, 1))`.
pub fn efficiency_index(rows: &[MethodResult]) -> Result<EfficiencyTable> {
    if rows.is_empty() {
        return Err(Error::invalid("efficiency index needs at least one row"));
    }
    if let Some(r) = rows
        .iter()
        .find(|r| r.ct_minutes.is_nan() || r.ct_minutes < 0.0)
    {
        return Err(Error::invalid(format!(
            "negative compute time {} for {}",
            r.ct_minutes, r.model_id
        )));
    }
    let raw: Vec<f64> = rows
        .iter()
        .map(|r| r.metrics.ci / r.ct_minutes.max(CT_FLOOR_MINUTES))
        .collect();
    let top = raw.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::invalid("every row has a zero comparative index"));
    }
    Ok(EfficiencyTable {
        rows: rows.to_vec(),
        cc: raw.iter().map(|r| r / top).collect(),
    })
}

/// Six-decimal formatting that never prints a negative zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}
