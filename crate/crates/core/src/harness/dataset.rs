use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::classify::{valid_image_id, Label};
use crate::imagecore::{load_image, Image};
use crate::rng::SplitMix64;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";
const MANIFEST_HEADER: [&str; 3] = ["image_id", "path", "label"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub label: Label,
}

/// Labelled image list backing an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    index: HashMap<String, usize>,
}

/// Train / evaluation partition as indices into the manifest, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if !valid_image_id(&e.image_id) {
                return Err(Error::invalid(format!("invalid image id {:?}", e.image_id)));
            }
            if index.insert(e.image_id.clone(), i).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate image id {:?}",
                    e.image_id
                )));
            }
        }
        Ok(Self {
            root: root.into(),
            entries,
            index,
        })
    }

    /// Reads `manifest.csv` (or the manifest inside a directory) and checks
    /// that every listed image exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path.push(MANIFEST_FILE);
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let csv_err = |line: u64, msg: String| Error::Csv {
            path: path.clone(),
            line,
            msg,
        };
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(file);
        let mut records = rdr.records();
        match records.next() {
            Some(Ok(h)) if h.iter().eq(MANIFEST_HEADER) => {}
            _ => {
                return Err(csv_err(
                    1,
                    format!("header must be exactly {}", MANIFEST_HEADER.join(",")),
                ))
            }
        }
        let mut entries = Vec::new();
        for rec in records {
            let rec =
                rec.map_err(|e| csv_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(csv_err(
                    line,
                    format!("expected 3 fields, found {}", rec.len()),
                ));
            }
            let label = rec[2].parse().map_err(|m| csv_err(line, m))?;
            let rel = PathBuf::from(&rec[1]);
            if !root.join(&rel).is_file() {
                return Err(csv_err(line, format!("image file {:?} not found", &rec[1])));
            }
            entries.push(ManifestEntry {
                image_id: rec[0].to_string(),
                path: rel,
                label,
            });
        }
        Self::new(root, entries).map_err(|e| csv_err(0, e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = MANIFEST_HEADER.join(",");
        s.push('\n');
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{}\n",
                e.image_id,
                e.path.to_string_lossy().replace('\\', "/"),
                e.label
            ));
        }
        s
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.index.get(image_id).map(|&i| &self.entries[i])
    }

    pub fn truth(&self) -> HashMap<String, Label> {
        self.entries
            .iter()
            .map(|e| (e.image_id.clone(), e.label))
            .collect()
    }

    /// Stratified seeded partition: each label's entries are shuffled and
    /// the first `round(ratio · count)` go to training.
    pub fn split(&self, train_ratio: f64, seed: u64) -> Result<Split> {
        if !(0.0..=1.0).contains(&train_ratio) {
            return Err(Error::invalid(format!(
                "train ratio {train_ratio} outside [0, 1]"
            )));
        }
        let mut rng = SplitMix64::new(seed);
        let mut train = Vec::new();
        let mut eval = Vec::new();
        for label in [Label::Crack, Label::NonCrack] {
            let mut idx: Vec<usize> = (0..self.entries.len())
                .filter(|&i| self.entries[i].label == label)
                .collect();
            rng.shuffle(&mut idx);
            let cut = (train_ratio * idx.len() as f64).round() as usize;
            train.extend_from_slice(&idx[..cut]);
            eval.extend_from_slice(&idx[cut..]);
        }
        train.sort_unstable();
        eval.sort_unstable();
        Ok(Split { train, eval })
    }

    pub fn load_images(&self) -> Result<Vec<Image>> {
        self.entries
            .iter()
            .map(|e| load_image(self.root.join(&e.path)))
            .collect()
    }
}

/// A manifest with its images in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub images: Vec<Image>,
}

impl Dataset {
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let images = manifest.load_images()?;
        Ok(Self { manifest, images })
    }

    pub fn labelled(&self, indices: &[usize]) -> Vec<(Image, Label)> {
        indices
            .iter()
            .map(|&i| (self.images[i].clone(), self.manifest.entries()[i].label))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize) -> DatasetManifest {
        let entries = (0..n)
            .map(|i| ManifestEntry {
                image_id: format!("img_{i:04}"),
                path: format!("img_{i:04}.pgm").into(),
                label: if i % 2 == 0 {
                    Label::Crack
                } else {
                    Label::NonCrack
                },
            })
            .collect();
        DatasetManifest::new("", entries).unwrap()
    }

    #[test]
    fn split_partitions_exactly() {
        let m = manifest(200);
        let s = m.split(0.7, 42).unwrap();
        assert_eq!((s.train.len(), s.eval.len()), (140, 60));
        let mut all: Vec<usize> = s.train.iter().chain(&s.eval).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
        let eval_cracks = s.eval.iter().filter(|&&i| i % 2 == 0).count();
        assert_eq!(eval_cracks, 30);
        assert_eq!(m.split(0.7, 42).unwrap(), s);
        assert_ne!(m.split(0.7, 43).unwrap(), s);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let e = ManifestEntry {
            image_id: "a".into(),
            path: "a.pgm".into(),
            label: Label::Crack,
        };
        assert!(DatasetManifest::new("", vec![e.clone(), e]).is_err());
    }

    #[test]
    fn load_checks_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(MANIFEST_FILE),
            "image_id,path,label\na,a.pgm,crack\n",
        )
        .unwrap();
        let err = DatasetManifest::load(dir.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        std::fs::write(dir.path().join("a.pgm"), b"P5\n1 1\n255\n\x00").unwrap();
        let m = DatasetManifest::load(dir.path()).unwrap();
        assert_eq!(m.get("a").unwrap().label, Label::Crack);
        assert_eq!(m.to_csv(), "image_id,path,label\na,a.pgm,crack\n");
    }
}
