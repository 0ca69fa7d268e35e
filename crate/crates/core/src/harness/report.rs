//! Report emission: results CSV, timing sidecar, markdown summary and SVG
//! charts. Everything except the timing sidecar is a pure function of the
//! results, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use super::grid::CellTiming;
use super::svg::{bar_chart, Bar};
use super::Method;
use crate::metrics::{efficiency_index, fmt6, percent_change, MethodResult};
use crate::{Error, Result};

pub const RESULTS_HEADER: &str =
    "model,method,noise,precision,recall,f1,accuracy,ci,ct_minutes,cc,pct_change_ci";
pub const TIMINGS_HEADER: &str = "model,method,noise,ct_minutes";

/// Noise column value of the clean, unfiltered reference row.
pub const REFERENCE_NOISE: &str = "reference";

/// Files holding wall-clock measurements; excluded from reproducibility checks.
pub const TIMING_SIDECAR: [&str; 2] = ["timings.csv", "timing.svg"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub result: MethodResult,
    pub cc: f64,
    pub pct_change_ci: f64,
}

/// In-memory report files, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub rows: Vec<ResultRow>,
    pub files: Vec<(String, String)>,
}

impl ReportBundle {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    /// Writes every file into `out`. Files are staged in a scratch
    /// directory first so a failed run never leaves a partial report.
    pub fn write(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let staging = out.join(".staging");
        if staging.exists() {
            std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        std::fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
        for (name, contents) in &self.files {
            let p = staging.join(name);
            std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
        }
        for (name, _) in &self.files {
            let dest: PathBuf = out.join(name);
            std::fs::rename(staging.join(name), &dest).map_err(|e| Error::io(&dest, e))?;
        }
        std::fs::remove_dir(&staging).map_err(|e| Error::io(&staging, e))
    }
}

/// Computes Cc per noise condition and percent change of CI against each
/// model's reference, then renders every report file.
pub fn render_reports(
    results: &[MethodResult],
    references: &[MethodResult],
    timings: &[CellTiming],
) -> Result<ReportBundle> {
    if results.is_empty() {
        return Err(Error::invalid("no results to report"));
    }
    let mut all: Vec<MethodResult> = references.iter().chain(results).cloned().collect();
    all.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in all.iter().enumerate() {
        groups.entry(r.noise_id.as_str()).or_default().push(i);
    }
    let mut cc = vec![0.0; all.len()];
    for idx in groups.values() {
        let rows: Vec<MethodResult> = idx.iter().map(|&i| all[i].clone()).collect();
        // A group where every CI is zero has no meaningful efficiency.
        if let Ok(t) = efficiency_index(&rows) {
            for (&i, c) in idx.iter().zip(t.cc) {
                cc[i] = c;
            }
        }
    }

    let rows = all
        .iter()
        .zip(cc)
        .map(|(r, cc)| {
            let reference = references.iter().find(|x| x.model_id == r.model_id);
            let pct = match reference {
                Some(x) if x.metrics.ci > 0.0 => percent_change(r.metrics.ci, x.metrics.ci)?,
                _ => 0.0,
            };
            Ok(ResultRow {
                result: r.clone(),
                cc,
                pct_change_ci: pct,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files = vec![
        ("results.csv".to_string(), format_results_csv(&rows)),
        ("report.md".to_string(), markdown(&rows, references)),
    ];
    for noise in groups.keys().filter(|n| **n != REFERENCE_NOISE) {
        let in_noise: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.result.noise_id == *noise)
            .collect();
        let bars = |f: &dyn Fn(&ResultRow) -> f64| -> Vec<Bar> {
            in_noise
                .iter()
                .map(|r| Bar {
                    label: format!("{}/{}", r.result.model_id, r.result.method),
                    value: f(r),
                    series: method_series(r.result.method),
                })
                .collect()
        };
        files.push((
            format!("accuracy_{noise}.svg"),
            bar_chart(
                &format!("Accuracy under {noise}"),
                "accuracy",
                &bars(&|r| r.result.metrics.accuracy),
            ),
        ));
        files.push((
            format!("efficiency_{noise}.svg"),
            bar_chart(
                &format!("Computational efficiency index under {noise}"),
                "Cc",
                &bars(&|r| r.cc),
            ),
        ));
    }

    let mut timings = timings.to_vec();
    timings.sort_by(|a, b| {
        (&a.model_id, a.method, &a.noise_id).cmp(&(&b.model_id, b.method, &b.noise_id))
    });
    files.push((TIMING_SIDECAR[0].to_string(), format_timings_csv(&timings)));
    let timing_bars: Vec<Bar> = timings
        .iter()
        .map(|t| Bar {
            label: format!("{}/{}/{}", t.model_id, t.method, t.noise_id),
            value: t.ct_minutes,
            series: method_series(t.method),
        })
        .collect();
    files.push((
        TIMING_SIDECAR[1].to_string(),
        bar_chart("Computation time per cell", "minutes", &timing_bars),
    ));

    Ok(ReportBundle { rows, files })
}

/// Renders and writes the full report set into `out`.
pub fn emit_reports(
    results: &[MethodResult],
    references: &[MethodResult],
    timings: &[CellTiming],
    out: &Path,
) -> Result<ReportBundle> {
    let bundle = render_reports(results, references, timings)?;
    bundle.write(out)?;
    Ok(bundle)
}

fn method_series(m: Method) -> usize {
    match m {
        Method::M1 => 0,
        Method::M2 => 1,
        Method::M3 => 2,
    }
}

pub fn format_results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        let m = &r.result.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.result.model_id,
            r.result.method,
            r.result.noise_id,
            fmt6(m.precision),
            fmt6(m.recall),
            fmt6(m.f1),
            fmt6(m.accuracy),
            fmt6(m.ci),
            fmt6(r.result.ct_minutes),
            fmt6(r.cc),
            fmt6(r.pct_change_ci),
        );
    }
    s
}

pub fn format_timings_csv(timings: &[CellTiming]) -> String {
    let mut s = String::from(TIMINGS_HEADER);
    s.push('\n');
    for t in timings {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            t.model_id,
            t.method,
            t.noise_id,
            fmt6(t.ct_minutes)
        );
    }
    s
}

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

fn markdown(rows: &[ResultRow], references: &[MethodResult]) -> String {
    let mut s = String::from("# Noise robustness benchmark\n\n");

    let mut refs: Vec<&MethodResult> = references.iter().collect();
    refs.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    if !refs.is_empty() {
        s.push_str("## Reference (no noise, no enhancement)\n\n");
        s.push_str("| Attribute % |");
        for r in &refs {
            let _ = write!(s, " {} |", r.model_id);
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(refs.len()));
        s.push('\n');
        type Getter = fn(&MethodResult) -> f64;
        let lines: [(&str, Getter); 5] = [
            ("Validation (recall)", |r| r.metrics.recall),
            ("Precision", |r| r.metrics.precision),
            ("F1", |r| r.metrics.f1),
            ("Accuracy", |r| r.metrics.accuracy),
            ("CI", |r| r.metrics.ci),
        ];
        for (name, f) in lines {
            let _ = write!(s, "| {name} |");
            for r in &refs {
                let _ = write!(s, " {} |", pct(f(r)));
            }
            s.push('\n');
        }
        s.push('\n');
    }

    s.push_str("## Results\n\n");
    let mut noises: Vec<&str> = rows
        .iter()
        .map(|r| r.result.noise_id.as_str())
        .filter(|n| *n != REFERENCE_NOISE)
        .collect();
    noises.sort_unstable();
    noises.dedup();
    for noise in &noises {
        let _ = writeln!(s, "### {noise}\n");
        s.push_str(
            "| Model | Method | Precision | Recall | F1 | Accuracy | CI | CI change % | Cc |\n",
        );
        s.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in rows.iter().filter(|r| r.result.noise_id == *noise) {
            let m = &r.result.metrics;
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {:.2} | {:.3} |",
                r.result.model_id,
                r.result.method,
                pct(m.precision),
                pct(m.recall),
                pct(m.f1),
                pct(m.accuracy),
                pct(m.ci),
                r.pct_change_ci,
                r.cc
            );
        }
        s.push('\n');
    }

    s.push_str("## Best method per noise condition\n\n");
    s.push_str("| Noise | Method | Model | CI % | Accuracy % |\n|---|---|---|---|---|\n");
    for noise in &noises {
        let mut best: Option<&ResultRow> = None;
        for r in rows.iter().filter(|r| r.result.noise_id == *noise) {
            if best.is_none_or(|b| r.result.metrics.ci > b.result.metrics.ci) {
                best = Some(r);
            }
        }
        if let Some(b) = best {
            let _ = writeln!(
                s,
                "| {noise} | {} ({}) | {} | {} | {} |",
                b.result.method,
                b.result.method.describe(),
                b.result.model_id,
                pct(b.result.metrics.ci),
                pct(b.result.metrics.accuracy)
            );
        }
    }
    s.push_str(
        "\nWall-clock computation time per cell is recorded in `timings.csv` and `timing.svg`.\n",
    );
    s
}
