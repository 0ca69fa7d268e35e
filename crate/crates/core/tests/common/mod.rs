//! Brute-force reference implementations used by the integration tests.
//! They follow the textbook formulas directly and share no code with the
//! library beyond the `Image` container.

#![allow(dead_code)]

use crackbench::rng::SplitMix64;
use crackbench::{Image, Label};

pub fn random_gray(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = SplitMix64::new(seed);
    let data = (0..w * h).map(|_| rng.next_f64()).collect();
    Image::from_gray(w, h, data).unwrap()
}

fn px(img: &Image, x: isize, y: isize) -> f64 {
    let xc = x.clamp(0, img.width() as isize - 1) as usize;
    let yc = y.clamp(0, img.height() as isize - 1) as usize;
    img.data()[yc * img.width() + xc]
}

/// Adaptive Wiener filter written as a per-pixel double loop: local mean,
/// local variance as mean of squares minus squared mean, noise variance as
/// the average local variance, then `δ + (σ² − v²)/σ² · (s − δ)` with the
/// gain floored at zero. Replicate padding at the borders.
pub fn wiener_oracle(img: &Image, p: usize, q: usize, noise: Option<f64>) -> Vec<f64> {
    let (w, h) = img.dims();
    let (rx, ry) = ((p / 2) as isize, (q / 2) as isize);
    let n = (p * q) as f64;
    let mut means = vec![0.0; w * h];
    let mut vars = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for j in -ry..=ry {
                for i in -rx..=rx {
                    let s = px(img, x as isize + i, y as isize + j);
                    sum += s;
                    sum_sq += s * s;
                }
            }
            let mean = sum / n;
            means[y * w + x] = mean;
            vars[y * w + x] = (sum_sq / n - mean * mean).max(0.0);
        }
    }
    let v2 = noise.unwrap_or(vars.iter().sum::<f64>() / vars.len() as f64);
    (0..w * h)
        .map(|k| {
            let (s, m, var) = (img.data()[k], means[k], vars[k]);
            let gain = if var <= v2 { 0.0 } else { (var - v2) / var };
            (m + gain * (s - m)).clamp(0.0, 1.0)
        })
        .collect()
}

/// Plain weighted sum over a replicate-padded window, anchored at the
/// kernel centre. `weights` is row-major `kw × kh`.
pub fn correlate_oracle(img: &Image, weights: &[f64], kw: usize, kh: usize) -> Vec<f64> {
    let (w, h) = img.dims();
    let (rx, ry) = ((kw / 2) as isize, (kh / 2) as isize);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for j in -ry..=ry {
                for i in -rx..=rx {
                    let wt = weights[((j + ry) as usize) * kw + (i + rx) as usize];
                    acc += wt * px(img, x as isize + i, y as isize + j);
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Normalised 2-D Gaussian evaluated directly at radius `⌈3σ⌉`.
pub fn gaussian_oracle(sigma: f64) -> (Vec<f64>, usize) {
    let r = (3.0 * sigma).ceil() as isize;
    let n = (2 * r + 1) as usize;
    let mut g = Vec::with_capacity(n * n);
    for y in -r..=r {
        for x in -r..=r {
            g.push((-((x * x + y * y) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = g.iter().sum();
    (g.into_iter().map(|v| v / total).collect(), n)
}

/// `(1 + λ)·I − λ·(I ⊗ G_σ)` with brute-force convolution.
pub fn usm_oracle(img: &Image, sigma: f64, lambda: f64) -> Vec<f64> {
    let (g, n) = gaussian_oracle(sigma);
    let blurred = correlate_oracle(img, &g, n, n);
    img.data()
        .iter()
        .zip(&blurred)
        .map(|(i, b)| (1.0 + lambda) * i - lambda * b)
        .collect()
}

/// Unnormalised Sobel gradient magnitude with replicate padding.
#[allow(clippy::needless_range_loop)]
pub fn sobel_oracle(img: &Image) -> Vec<f64> {
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    let v = px(
                        img,
                        x as isize + i as isize - 1,
                        y as isize + j as isize - 1,
                    );
                    gx += KX[j][i] * v;
                    gy += KX[i][j] * v;
                }
            }
            out[y * w + x] = (gx * gx + gy * gy).sqrt();
        }
    }
    out
}

pub fn edge_fraction_oracle(img: &Image, g: f64) -> f64 {
    let mags = sobel_oracle(img);
    mags.iter().filter(|m| **m > g).count() as f64 / mags.len() as f64
}

/// Counts from raw (predicted, actual) pairs with Crack as the positive class.
pub struct Tally {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    pub tn: f64,
}

pub fn tally(pairs: &[(Label, Label)]) -> Tally {
    let mut t = Tally {
        tp: 0.0,
        fp: 0.0,
        fn_: 0.0,
        tn: 0.0,
    };
    for (pred, actual) in pairs {
        match (pred, actual) {
            (Label::Crack, Label::Crack) => t.tp += 1.0,
            (Label::Crack, Label::NonCrack) => t.fp += 1.0,
            (Label::NonCrack, Label::Crack) => t.fn_ += 1.0,
            (Label::NonCrack, Label::NonCrack) => t.tn += 1.0,
        }
    }
    t
}

/// (precision, recall, f1, accuracy) from a tally, zero where undefined.
pub fn prf_oracle(t: &Tally) -> (f64, f64, f64, f64) {
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let p = div(t.tp, t.tp + t.fp);
    let r = div(t.tp, t.tp + t.fn_);
    let f1 = div(2.0 * p * r, p + r);
    let acc = div(t.tp + t.tn, t.tp + t.fp + t.fn_ + t.tn);
    (p, r, f1, acc)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
