//! The classification stage: a classifier contract, a Sobel edge-density
//! baseline and ingestion of predictions produced by external models.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::harness::DatasetManifest;
use crate::imagecore::{to_gray, Image, NormalizedImage};
use crate::{Error, Result};

pub const PREDICTION_HEADER: [&str; 4] = ["image_id", "label", "score", "elapsed_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Crack,
    NonCrack,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Crack => "crack",
            Label::NonCrack => "non_crack",
        }
    }

    pub fn is_crack(self) -> bool {
        self == Label::Crack
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "crack" => Ok(Label::Crack),
            "non_crack" => Ok(Label::NonCrack),
            other => Err(format!("label must be crack or non_crack, got {other:?}")),
        }
    }
}

/// One classifier verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: String,
    pub label: Label,
    /// Higher means more crack-like; in `[0, 1]`.
    pub score: f64,
    pub elapsed_ms: f64,
}

/// Image ids are restricted so CSV rows never need quoting.
pub fn valid_image_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

pub trait Classifier: Send + Sync {
    /// Name used as the `model` column of reports.
    fn id(&self) -> &str;

    /// Required `(width, height)`, if the classifier constrains it.
    fn input_size(&self) -> Option<(usize, usize)>;

    /// Deterministic in everything but `elapsed_ms`, which is the wall time
    /// of the call on a monotonic clock.
    fn predict(&self, image_id: &str, img: &NormalizedImage) -> Result<Prediction>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDensityParams {
    /// Sobel magnitude a pixel must exceed to count as an edge.
    #[serde(default = "default_gradient_threshold")]
    pub gradient_threshold: f64,
    /// Edge fraction above which an image is called a crack.
    #[serde(default)]
    pub density_threshold: f64,
}

pub const DEFAULT_GRADIENT_THRESHOLD: f64 = 0.25;

fn default_gradient_threshold() -> f64 {
    DEFAULT_GRADIENT_THRESHOLD
}

impl Default for EdgeDensityParams {
    fn default() -> Self {
        Self {
            gradient_threshold: DEFAULT_GRADIENT_THRESHOLD,
            density_threshold: 0.0,
        }
    }
}

impl EdgeDensityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_threshold > 0.0 && self.gradient_threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "gradient threshold must be positive, got {}",
                self.gradient_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.density_threshold) {
            return Err(Error::invalid(format!(
                "density threshold {} outside [0, 1]",
                self.density_threshold
            )));
        }
        Ok(())
    }
}

/// Scores an image by the fraction of strong-gradient pixels.
#[derive(Debug, Clone)]
pub struct EdgeDensityClassifier {
    id: String,
    params: EdgeDensityParams,
    input_size: Option<(usize, usize)>,
}

impl EdgeDensityClassifier {
    pub const ID: &'static str = "edge_density";

    pub fn new(params: EdgeDensityParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            id: Self::ID.to_string(),
            params,
            input_size: None,
        })
    }

    pub fn with_input_size(mut self, width: usize, height: usize) -> Self {
        self.input_size = Some((width, height));
        self
    }

    pub fn params(&self) -> &EdgeDensityParams {
        &self.params
    }
}

impl Classifier for EdgeDensityClassifier {
    fn id(&self) -> &str {
        &self.id
    }

    fn input_size(&self) -> Option<(usize, usize)> {
        self.input_size
    }

    fn predict(&self, image_id: &str, img: &NormalizedImage) -> Result<Prediction> {
        let start = Instant::now();
        if let Some(size) = self.input_size {
            if img.dims() != size {
                return Err(Error::invalid(format!(
                    "{image_id}: classifier expects {}x{}, got {}x{}",
                    size.0,
                    size.1,
                    img.dims().0,
                    img.dims().1
                )));
            }
        }
        // Sobel responses are shift invariant, so scoring the centred image
        // equals scoring the original.
        let score = edge_density_score(&to_gray(&img.base), self.params.gradient_threshold)?;
        Ok(Prediction {
            image_id: image_id.to_string(),
            label: if score > self.params.density_threshold {
                Label::Crack
            } else {
                Label::NonCrack
            },
            score,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// Sobel gradient magnitude with replicate padding.
pub fn sobel_magnitude(img: &Image) -> Result<Image> {
    if img.channels() != 1 {
        return Err(Error::invalid("sobel expects a grayscale image"));
    }
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy, 0);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    Image::from_gray(w, h, out)
}

/// Fraction of pixels whose Sobel magnitude exceeds `threshold`.
pub fn edge_density_score(img: &Image, threshold: f64) -> Result<f64> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::invalid(format!(
            "edge density needs at least 3x3 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let mag = sobel_magnitude(img)?;
    let hits = mag.data().iter().filter(|m| **m > threshold).count();
    Ok(hits as f64 / mag.data().len() as f64)
}

/// Picks the density threshold that best separates scored training
/// examples. Returns `(threshold, training accuracy)`.
///
/// Candidates are the midpoints between adjacent distinct scores, plus the
/// midpoint between 0 and the lowest score (everything a crack) and the
/// highest score itself (nothing a crack). The first candidate reaching the
/// best accuracy wins, so ties go to the smallest threshold.
pub fn best_threshold(scored: &[(f64, Label)]) -> Result<(f64, f64)> {
    let n = scored.len();
    let cracks = scored.iter().filter(|(_, l)| l.is_crack()).count();
    if cracks == 0 || cracks == n {
        return Err(Error::invalid(
            "threshold calibration needs both crack and non-crack examples",
        ));
    }
    if let Some((s, _)) = scored.iter().find(|(s, _)| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid(format!("score {s} outside [0, 1]")));
    }
    let mut sorted: Vec<(f64, Label)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut candidates = Vec::new();
    if sorted[0].0 > 0.0 {
        candidates.push(sorted[0].0 / 2.0);
    }
    for pair in sorted.windows(2) {
        if pair[1].0 > pair[0].0 {
            candidates.push((pair[0].0 + pair[1].0) / 2.0);
        }
    }
    candidates.push(sorted[n - 1].0);

    // Sweep with a running count of labels at or below the cut.
    let mut best = (f64::NAN, -1.0);
    let mut idx = 0;
    let (mut cracks_below, mut clean_below) = (0usize, 0usize);
    for tau in candidates {
        while idx < n && sorted[idx].0 <= tau {
            match sorted[idx].1 {
                Label::Crack => cracks_below += 1,
                Label::NonCrack => clean_below += 1,
            }
            idx += 1;
        }
        let correct = clean_below + (cracks - cracks_below);
        let acc = correct as f64 / n as f64;
        if acc > best.1 {
            best = (tau, acc);
        }
    }
    Ok(best)
}

/// Calibrates the density threshold on labelled images.
pub fn calibrate_threshold(
    train: &[(Image, Label)],
    gradient_threshold: f64,
) -> Result<(f64, f64)> {
    let scored = train
        .iter()
        .map(|(img, label)| {
            Ok((
                edge_density_score(&to_gray(img), gradient_threshold)?,
                *label,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    best_threshold(&scored)
}

/// Reads a prediction CSV without reference to a dataset.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(file, path)
}

/// Reads a prediction CSV and checks every id against `manifest`.
pub fn ingest_predictions(
    path: impl AsRef<Path>,
    manifest: &DatasetManifest,
) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let preds = read_predictions(path)?;
    for (i, p) in preds.iter().enumerate() {
        if manifest.get(&p.image_id).is_none() {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                msg: format!("image id {:?} is not in the dataset manifest", p.image_id),
            });
        }
    }
    Ok(preds)
}

fn parse_predictions(reader: impl std::io::Read, path: &Path) -> Result<Vec<Prediction>> {
    let err = |line: u64, msg: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    match records.next() {
        Some(Ok(h)) if h.iter().eq(PREDICTION_HEADER) => {}
        Some(Ok(_)) | None => {
            return Err(err(
                1,
                format!("header must be exactly {}", PREDICTION_HEADER.join(",")),
            ))
        }
        Some(Err(e)) => return Err(err(1, e.to_string())),
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(err(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let id = &rec[0];
        if !valid_image_id(id) {
            return Err(err(line, format!("invalid image id {id:?}")));
        }
        let label: Label = rec[1].parse().map_err(|m| err(line, m))?;
        let score: f64 = rec[2]
            .parse()
            .map_err(|_| err(line, format!("score {:?} is not a number", &rec[2])))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(err(line, format!("score {score} outside [0, 1]")));
        }
        let elapsed_ms: f64 = rec[3]
            .parse()
            .map_err(|_| err(line, format!("elapsed_ms {:?} is not a number", &rec[3])))?;
        if !(elapsed_ms >= 0.0 && elapsed_ms.is_finite()) {
            return Err(err(line, format!("elapsed_ms {elapsed_ms} must be >= 0")));
        }
        if !seen.insert(id.to_string()) {
            return Err(err(line, format!("duplicate image id {id:?}")));
        }
        out.push(Prediction {
            image_id: id.to_string(),
            label,
            score,
            elapsed_ms,
        });
    }
    Ok(out)
}

/// Serialises predictions in the CSV format [`read_predictions`] accepts.
pub fn format_predictions(preds: &[Prediction]) -> String {
    let mut s = PREDICTION_HEADER.join(",");
    s.push('\n');
    for p in preds {
        s.push_str(&format!(
            "{},{},{},{}\n",
            p.image_id, p.label, p.score, p.elapsed_ms
        ));
    }
    s
}

pub fn write_predictions(preds: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(format_predictions(preds).as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::normalize;

    fn line_image(w: usize, h: usize, col: usize) -> Image {
        Image::from_fn(w, h, 1, |x, _, _| if x == col { 0.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn blank_image_scores_zero() {
        let c = EdgeDensityClassifier::new(EdgeDensityParams::default()).unwrap();
        let img = normalize(&Image::filled(16, 16, 1, 0.0).unwrap());
        let p = c.predict("a", &img).unwrap();
        assert_eq!((p.score, p.label), (0.0, Label::NonCrack));
    }

    #[test]
    fn vertical_line_is_crack() {
        let (w, h) = (32, 20);
        let img = line_image(w, h, 10);
        // Columns either side of the line respond with |Gx| = 4; the line
        // column itself cancels.
        assert_eq!(edge_density_score(&img, 0.25).unwrap(), 2.0 / w as f64);
        let c = EdgeDensityClassifier::new(EdgeDensityParams {
            gradient_threshold: 0.25,
            density_threshold: 1.0 / w as f64,
        })
        .unwrap();
        let p = c.predict("line", &normalize(&img)).unwrap();
        assert!(p.score > 0.0);
        assert_eq!(p.label, Label::Crack);
    }

    #[test]
    fn predict_is_deterministic() {
        let img = normalize(&line_image(16, 16, 3));
        let c = EdgeDensityClassifier::new(EdgeDensityParams::default()).unwrap();
        let a = c.predict("x", &img).unwrap();
        let b = c.predict("x", &img).unwrap();
        assert_eq!((a.label, a.score), (b.label, b.score));
        assert!(a.elapsed_ms >= 0.0);
    }

    #[test]
    fn input_size_enforced() {
        let c = EdgeDensityClassifier::new(EdgeDensityParams::default())
            .unwrap()
            .with_input_size(8, 8);
        let img = normalize(&Image::filled(9, 8, 1, 0.5).unwrap());
        assert!(c.predict("x", &img).is_err());
    }

    #[test]
    fn tiny_image_rejected() {
        let img = Image::filled(2, 5, 1, 0.5).unwrap();
        assert!(edge_density_score(&img, 0.25).is_err());
    }

    #[test]
    fn separable_threshold() {
        let scored = [
            (0.40, Label::Crack),
            (0.01, Label::NonCrack),
            (0.30, Label::Crack),
            (0.02, Label::NonCrack),
        ];
        let (tau, acc) = best_threshold(&scored).unwrap();
        assert!((tau - 0.16).abs() < 1e-12);
        assert_eq!(acc, 1.0);

        let mut rev = scored;
        rev.reverse();
        assert_eq!(best_threshold(&rev).unwrap(), (tau, acc));
    }

    #[test]
    fn identical_scores_fall_back_to_majority() {
        let scored = [
            (0.2, Label::Crack),
            (0.2, Label::Crack),
            (0.2, Label::NonCrack),
        ];
        assert_eq!(best_threshold(&scored).unwrap().1, 2.0 / 3.0);
        let scored = [
            (0.2, Label::Crack),
            (0.2, Label::NonCrack),
            (0.2, Label::NonCrack),
        ];
        assert_eq!(best_threshold(&scored).unwrap().1, 2.0 / 3.0);
    }

    #[test]
    fn single_class_rejected() {
        assert!(best_threshold(&[(0.1, Label::Crack), (0.2, Label::Crack)]).is_err());
    }

    #[test]
    fn parse_row() {
        let csv = "image_id,label,score,elapsed_ms\nimg_007,crack,0.93,41.2\n";
        let p = parse_predictions(csv.as_bytes(), Path::new("p.csv")).unwrap();
        assert_eq!(
            p,
            vec![Prediction {
                image_id: "img_007".into(),
                label: Label::Crack,
                score: 0.93,
                elapsed_ms: 41.2,
            }]
        );
    }

    #[test]
    fn parse_errors_carry_lines() {
        let cases = [
            ("image_id,label,score\n", 1, "header"),
            (
                "image_id,label,score,elapsed_ms\na,crack,0.5,1\nb,cracked,0.5,1\n",
                3,
                "label",
            ),
            (
                "image_id,label,score,elapsed_ms\na,crack,1.5,1\n",
                2,
                "score",
            ),
            (
                "image_id,label,score,elapsed_ms\na,crack,0.5,1\na,crack,0.5,1\n",
                3,
                "duplicate",
            ),
            (
                "image_id,label,score,elapsed_ms\na,crack,0.5,-1\n",
                2,
                "elapsed",
            ),
        ];
        for (text, line, needle) in cases {
            match parse_predictions(text.as_bytes(), Path::new("p.csv")) {
                Err(Error::Csv { line: l, msg, .. }) => {
                    assert_eq!(l, line, "{msg}");
                    assert!(msg.contains(needle), "{msg}");
                }
                other => panic!("expected csv error, got {other:?}"),
            }
        }
    }

    #[test]
    fn labels_roundtrip() {
        for l in [Label::Crack, Label::NonCrack] {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{l}\""));
        }
    }
}
