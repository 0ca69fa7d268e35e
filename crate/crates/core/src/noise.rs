//! Seeded image degradation: impulse (salt & pepper) noise and linear
//! motion blur, plus the 2-D correlation both blur and sharpening use.

use serde::{Deserialize, Serialize};

use crate::imagecore::Image;
use crate::rng::SplitMix64;
use crate::{Error, Result};

pub const DEFAULT_DENSITY: f64 = 0.05;
pub const DEFAULT_BLUR_LENGTH: f64 = 9.0;
pub const DEFAULT_BLUR_ANGLE: f64 = 0.0;

/// A degradation applied to evaluation images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    SaltPepper {
        #[serde(default = "default_density")]
        density: f64,
        #[serde(default)]
        seed: u64,
    },
    MotionBlur {
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "default_angle")]
        angle_deg: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}
fn default_length() -> f64 {
    DEFAULT_BLUR_LENGTH
}
fn default_angle() -> f64 {
    DEFAULT_BLUR_ANGLE
}

impl NoiseSpec {
    pub fn salt_pepper(density: f64, seed: u64) -> Self {
        NoiseSpec::SaltPepper { density, seed }
    }

    pub fn motion_blur(length: f64, angle_deg: f64) -> Self {
        NoiseSpec::MotionBlur {
            length,
            angle_deg: normalize_angle(angle_deg),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::SaltPepper { density, .. } => check_density(density),
            NoiseSpec::MotionBlur {
                length, angle_deg, ..
            } => {
                check_length(length)?;
                if !angle_deg.is_finite() {
                    return Err(Error::invalid("blur angle must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Stable identifier used in reports, e.g. `salt_pepper_0.05`.
    pub fn id(&self) -> String {
        match *self {
            NoiseSpec::None => "none".into(),
            NoiseSpec::SaltPepper { density, .. } => format!("salt_pepper_{density}"),
            NoiseSpec::MotionBlur {
                length, angle_deg, ..
            } => format!("motion_blur_{length}_{}", normalize_angle(angle_deg)),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    /// Degrades `img`. `seed` overrides the spec's own seed, so callers can
    /// give every image of a dataset an independent noise realisation.
    pub fn apply_seeded(&self, img: &Image, seed: u64) -> Result<Image> {
        match *self {
            NoiseSpec::None => Ok(img.clone()),
            NoiseSpec::SaltPepper { density, .. } => apply_salt_pepper(img, density, seed),
            NoiseSpec::MotionBlur {
                length, angle_deg, ..
            } => convolve2d(img, &motion_blur_kernel(length, angle_deg)?),
        }
    }

    pub fn apply(&self, img: &Image) -> Result<Image> {
        self.apply_seeded(img, self.seed())
    }

    pub fn seed(&self) -> u64 {
        match *self {
            NoiseSpec::None => 0,
            NoiseSpec::SaltPepper { seed, .. } | NoiseSpec::MotionBlur { seed, .. } => seed,
        }
    }
}

fn check_density(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid(format!("noise density {d} outside [0, 1]")))
    }
}

fn check_length(l: f64) -> Result<()> {
    if l >= 1.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("blur length {l} must be >= 1")))
    }
}

/// Maps an angle in degrees onto `[0, 180)`.
pub fn normalize_angle(deg: f64) -> f64 {
    let a = deg.rem_euclid(180.0);
    // rem_euclid can return exactly 180.0 for tiny negative inputs.
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

/// Forces each pixel, with probability `density`, to black or white.
///
/// Pixels are visited in row-major order. Each pixel consumes one draw to
/// decide whether it is hit; a hit pixel consumes a second draw choosing
/// white (`< 0.5`) or black. All channels of a hit pixel change together.
pub fn apply_salt_pepper(img: &Image, density: f64, seed: u64) -> Result<Image> {
    check_density(density)?;
    let mut rng = SplitMix64::new(seed);
    let ch = img.channels();
    let mut data = img.data().to_vec();
    for px in data.chunks_exact_mut(ch) {
        if rng.next_f64() < density {
            let v = if rng.next_f64() < 0.5 { 1.0 } else { 0.0 };
            px.fill(v);
        }
    }
    Image::new(img.width(), img.height(), ch, data)
}

/// A correlation kernel with odd dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel dimensions must be odd, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::invalid("kernel weight count does not match shape"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    pub fn identity() -> Self {
        Self {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    /// Scales the weights to sum to one.
    pub(crate) fn normalized(width: usize, height: usize, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("kernel weights sum to zero"));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(width, height, weights)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.weights[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|w| *w >= 0.0)
    }
}

/// Point-spread function of linear motion: a segment of `length` pixels
/// through the kernel centre at `angle_deg` (counter-clockwise from the +x
/// axis, image rows growing downward).
///
/// Each cell's weight is the length of segment lying inside that cell, so
/// axis-aligned kernels are exact box filters.
pub fn motion_blur_kernel(length: f64, angle_deg: f64) -> Result<Kernel> {
    check_length(length)?;
    let theta = normalize_angle(angle_deg);
    let (dx, dy) = direction(theta);
    let half = length / 2.0;
    let rx = radius(half * dx.abs());
    let ry = radius(half * dy.abs());
    let (w, h) = (2 * rx + 1, 2 * ry + 1);

    let mut weights = vec![0.0; w * h];
    for row in 0..h {
        let cy = row as f64 - ry as f64;
        for col in 0..w {
            let cx = col as f64 - rx as f64;
            let Some((a, b)) = slab(cx, dx, -half, half) else {
                continue;
            };
            let Some((a, b)) = slab(cy, dy, a, b) else {
                continue;
            };
            weights[row * w + col] = b - a;
        }
    }
    Kernel::normalized(w, h, weights)
}

/// Unit direction in kernel coordinates (x right, y down), exact on the axes.
fn direction(theta: f64) -> (f64, f64) {
    if theta == 0.0 {
        (1.0, 0.0)
    } else if theta == 90.0 {
        (0.0, -1.0)
    } else {
        let r = theta.to_radians();
        (r.cos(), -r.sin())
    }
}

fn radius(extent: f64) -> usize {
    (extent - 0.5).ceil().max(0.0) as usize
}

/// Clips the parameter range `[lo, hi]` of `t ↦ t * d` to the cell
/// `[centre - 0.5, centre + 0.5]`; `None` when nothing (or a point) remains.
fn slab(centre: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let (a, b) = if d == 0.0 {
        if centre.abs() > 0.5 {
            return None;
        }
        (lo, hi)
    } else {
        let t0 = (centre - 0.5) / d;
        let t1 = (centre + 0.5) / d;
        (lo.max(t0.min(t1)), hi.min(t0.max(t1)))
    };
    (b > a).then_some((a, b))
}

/// Per-channel 2-D correlation with replicate padding. Output has the
/// input's dimensions.
pub fn convolve2d(img: &Image, kernel: &Kernel) -> Result<Image> {
    let (w, h) = img.dims();
    let ch = img.channels();
    let (kw, kh) = (kernel.width, kernel.height);
    let (rx, ry) = ((kw / 2) as isize, (kh / 2) as isize);
    let bounded = kernel.is_nonnegative();

    let col_idx: Vec<Vec<usize>> = (0..w)
        .map(|x| {
            (0..kw as isize)
                .map(|i| (x as isize + i - rx).clamp(0, w as isize - 1) as usize)
                .collect()
        })
        .collect();
    let row_idx: Vec<Vec<usize>> = (0..h)
        .map(|y| {
            (0..kh as isize)
                .map(|j| (y as isize + j - ry).clamp(0, h as isize - 1) as usize)
                .collect()
        })
        .collect();

    let src = img.data();
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let centre = src[(y * w + x) * ch + c];
                // Summing deviations from the centre keeps constant
                // neighbourhoods exact; the hull clamp undoes rounding drift.
                let mut acc = 0.0;
                let (mut lo, mut hi) = (centre, centre);
                for (j, &sy) in row_idx[y].iter().enumerate() {
                    let krow = &kernel.weights[j * kw..(j + 1) * kw];
                    for (&k, &sx) in krow.iter().zip(&col_idx[x]) {
                        let v = src[(sy * w + sx) * ch + c];
                        acc += k * (v - centre);
                        if k != 0.0 {
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                }
                let v = centre + acc;
                out[(y * w + x) * ch + c] = if bounded { v.clamp(lo, hi) } else { v };
            }
        }
    }
    Image::new(w, h, ch, out)
}
