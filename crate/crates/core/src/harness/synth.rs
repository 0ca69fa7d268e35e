//! Desk-scale stand-in for a concrete crack dataset.
//!
//! Every image has a smooth value-noise background (intensity roughly
//! 0.55–0.75) with fine grain. Crack images add a dark anti-aliased random
//! walk; non-crack images may carry faint blotches instead.

use std::path::Path;

use super::dataset::{DatasetManifest, ManifestEntry, MANIFEST_FILE};
use crate::classify::Label;
use crate::imagecore::{save_image, Image};
use crate::rng::{derive_seed, SplitMix64};
use crate::{Error, Result};

const CELL: usize = 16;
const STEP: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub images: Vec<Image>,
}

impl SyntheticDataset {
    /// Writes the images as PGM files plus `manifest.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (entry, img) in self.manifest.entries().iter().zip(&self.images) {
            save_image(img, dir.join(&entry.path))?;
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest.to_csv()).map_err(|e| Error::io(&path, e))
    }
}

/// Generates `n` grayscale `size × size` images, half of them cracked.
/// Even indices are cracks. Pixel values are already quantised to 8 bits,
/// so the in-memory images equal what a reload from disk yields.
pub fn generate_synthetic_dataset(n: usize, size: usize, seed: u64) -> Result<SyntheticDataset> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "image count must be even and at least 2, got {n}"
        )));
    }
    if size < 64 {
        return Err(Error::invalid(format!(
            "image size must be >= 64, got {size}"
        )));
    }
    let mut entries = Vec::with_capacity(n);
    let mut images = Vec::with_capacity(n);
    for i in 0..n {
        let image_id = format!("img_{i:04}");
        let label = if i % 2 == 0 {
            Label::Crack
        } else {
            Label::NonCrack
        };
        let mut rng = SplitMix64::new(derive_seed(seed, &image_id));
        let mut px = background(size, &mut rng);
        match label {
            Label::Crack => draw_crack(&mut px, size, &mut rng),
            Label::NonCrack => draw_blotches(&mut px, size, &mut rng),
        }
        for v in &mut px {
            *v = ((v.clamp(0.0, 1.0) * 255.0 + 0.5).floor()) / 255.0;
        }
        images.push(Image::from_gray(size, size, px)?);
        entries.push(ManifestEntry {
            path: format!("{image_id}.pgm").into(),
            image_id,
            label,
        });
    }
    Ok(SyntheticDataset {
        manifest: DatasetManifest::new("", entries)?,
        images,
    })
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn background(size: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let base = rng.range(0.55, 0.65);
    let amp = 0.1;
    let g = size / CELL + 2;
    let lattice: Vec<f64> = (0..g * g).map(|_| rng.next_f64()).collect();
    let mut px = Vec::with_capacity(size * size);
    for y in 0..size {
        let fy = y as f64 / CELL as f64;
        let (gy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
        for x in 0..size {
            let fx = x as f64 / CELL as f64;
            let (gx, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
            let l = |i: usize, j: usize| lattice[j * g + i];
            let top = l(gx, gy) + tx * (l(gx + 1, gy) - l(gx, gy));
            let bot = l(gx, gy + 1) + tx * (l(gx + 1, gy + 1) - l(gx, gy + 1));
            let v = top + ty * (bot - top);
            let grain = rng.range(-0.01, 0.01);
            px.push(base + amp * v + grain);
        }
    }
    px
}

/// A meandering polyline crossing most of the image.
fn draw_crack(px: &mut [f64], size: usize, rng: &mut SplitMix64) {
    let s = size as f64;
    let width = rng.range(1.0, 3.0);
    let ink = rng.range(0.1, 0.3);
    let start = (rng.range(0.3 * s, 0.7 * s), rng.range(0.3 * s, 0.7 * s));
    let (dx, dy) = unit(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
    let half_steps = (rng.range(0.4, 0.7) * s / STEP) as usize;

    // Walk out from the start in both directions.
    let mut arms = [Vec::new(), Vec::new()];
    for (arm, sign) in arms.iter_mut().zip([1.0, -1.0]) {
        let (mut x, mut y) = start;
        let (mut ddx, mut ddy) = (sign * dx, sign * dy);
        for _ in 0..half_steps {
            (ddx, ddy) = unit(ddx + rng.range(-0.35, 0.35), ddy + rng.range(-0.35, 0.35));
            x += STEP * ddx;
            y += STEP * ddy;
            arm.push((x, y));
        }
    }
    let [forward, backward] = arms;
    let points: Vec<(f64, f64)> = backward
        .into_iter()
        .rev()
        .chain(std::iter::once(start))
        .chain(forward)
        .collect();

    let reach = width / 2.0 + 0.5;
    for y in 0..size {
        for x in 0..size {
            let p = (x as f64, y as f64);
            let d = points
                .windows(2)
                .map(|seg| segment_distance(p, seg[0], seg[1]))
                .fold(f64::INFINITY, f64::min);
            let cover = (reach - d).clamp(0.0, 1.0);
            if cover > 0.0 {
                let v = &mut px[y * size + x];
                *v = *v * (1.0 - cover) + ink * cover;
            }
        }
    }
}

/// Up to three faint, soft-edged stains.
fn draw_blotches(px: &mut [f64], size: usize, rng: &mut SplitMix64) {
    let s = size as f64;
    let count = rng.below(4);
    for _ in 0..count {
        let (cx, cy) = (rng.range(0.0, s), rng.range(0.0, s));
        let r = rng.range(6.0, 20.0);
        let depth = rng.range(-0.06, 0.06);
        for y in 0..size {
            for x in 0..size {
                let d2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (r * r);
                if d2 < 1.0 {
                    px[y * size + x] += depth * (1.0 - d2) * (1.0 - d2);
                }
            }
        }
    }
}

fn unit(x: f64, y: f64) -> (f64, f64) {
    let n = (x * x + y * y).sqrt();
    if n < 1e-9 {
        (1.0, 0.0)
    } else {
        (x / n, y / n)
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (wx - t * vx, wy - t * vy);
    (ex * ex + ey * ey).sqrt()
}
