//! The two enhancement methods evaluated against noise: a 2-D adaptive
//! (Wiener) filter driven by local mean and variance, and unsharp masking.

use serde::{Deserialize, Serialize};

use crate::imagecore::Image;
use crate::noise::{convolve2d, Kernel};
use crate::{Error, Result};

/// Per-pixel neighbourhood statistics of a grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStats {
    pub mean: Image,
    /// Local variance, never negative.
    pub variance: Image,
    pub window: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerParams {
    /// Neighbourhood `[width, height]`, both odd.
    #[serde(default = "default_window")]
    pub window: [usize; 2],
    /// Noise power; estimated per channel as the mean local variance when absent.
    #[serde(default)]
    pub noise_variance: Option<f64>,
}

fn default_window() -> [usize; 2] {
    [3, 3]
}

impl Default for WienerParams {
    fn default() -> Self {
        Self {
            window: default_window(),
            noise_variance: None,
        }
    }
}

impl WienerParams {
    pub fn validate(&self) -> Result<()> {
        let [p, q] = self.window;
        check_window(p, q)?;
        match self.noise_variance {
            Some(v) if !(v >= 0.0 && v.is_finite()) => Err(Error::invalid(format!(
                "noise variance must be a finite non-negative number, got {v}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsmParams {
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_sigma() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    0.8
}

impl Default for UsmParams {
    fn default() -> Self {
        Self {
            sigma: default_sigma(),
            lambda: default_lambda(),
        }
    }
}

impl UsmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "USM sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "USM lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

fn check_window(p: usize, q: usize) -> Result<()> {
    if p % 2 == 1 && q % 2 == 1 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "window dimensions must be odd, got {p}x{q}"
        )))
    }
}

/// Mean and variance over a `p × q` (width × height) replicate-padded
/// neighbourhood of every pixel.
///
/// Sums are taken over deviations from the centre pixel, which leaves
/// constant regions exact and avoids the cancellation of the raw
/// mean-of-squares form; the variance is still clamped at zero.
pub fn local_stats(img: &Image, p: usize, q: usize) -> Result<LocalStats> {
    check_window(p, q)?;
    if img.channels() != 1 {
        return Err(Error::invalid("local_stats expects a grayscale image"));
    }
    let (w, h) = img.dims();
    let (rx, ry) = ((p / 2) as isize, (q / 2) as isize);
    let n = (p * q) as f64;
    let mut mean = Vec::with_capacity(w * h);
    let mut var = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let centre = img.get(x as usize, y as usize, 0);
            let (mut s1, mut s2) = (0.0, 0.0);
            for dy in -ry..=ry {
                for dx in -rx..=rx {
                    let d = img.get_clamped(x + dx, y + dy, 0) - centre;
                    s1 += d;
                    s2 += d * d;
                }
            }
            let m = s1 / n;
            mean.push(centre + m);
            var.push((s2 / n - m * m).max(0.0));
        }
    }
    Ok(LocalStats {
        mean: Image::from_gray(w, h, mean)?,
        variance: Image::from_gray(w, h, var)?,
        window: (p, q),
    })
}

/// Fraction of a pixel's deviation from its local mean that survives the
/// adaptive filter: `max(σ² − v², 0) / max(σ², v²)`, always in `[0, 1]`.
#[inline]
pub fn wiener_gain(local_var: f64, noise_var: f64) -> f64 {
    let den = local_var.max(noise_var);
    if den > 0.0 {
        (local_var - noise_var).max(0.0) / den
    } else {
        0.0
    }
}

/// 2-D adaptive noise filter, applied independently per channel.
pub fn wiener_adaptive(img: &Image, params: &WienerParams) -> Result<Image> {
    params.validate()?;
    let [p, q] = params.window;
    img.map_channels(|plane| {
        let stats = local_stats(plane, p, q)?;
        let var = stats.variance.data();
        let noise = params
            .noise_variance
            .unwrap_or_else(|| var.iter().sum::<f64>() / var.len() as f64);
        let data = plane
            .data()
            .iter()
            .zip(stats.mean.data())
            .zip(var)
            .map(|((&s, &m), &v)| (m + wiener_gain(v, noise) * (s - m)).clamp(0.0, 1.0))
            .collect();
        Image::from_gray(plane.width(), plane.height(), data)
    })
}

/// Normalised square Gaussian of radius `⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    let r = (3.0 * sigma).ceil() as isize;
    let n = (2 * r + 1) as usize;
    let two_s2 = 2.0 * sigma * sigma;
    // Separable: build one axis and take the outer product so the kernel is
    // exactly symmetric under axis swaps and reflections.
    let axis: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / two_s2).exp())
        .collect();
    let weights = axis
        .iter()
        .flat_map(|a| axis.iter().map(move |b| a * b))
        .collect();
    Kernel::normalized(n, n, weights)
}

/// `I + λ (I − I ⊗ G_σ)` without the final clamp.
pub fn unsharp_mask_unclamped(img: &Image, params: &UsmParams) -> Result<Image> {
    params.validate()?;
    let blurred = convolve2d(img, &gaussian_kernel(params.sigma)?)?;
    let lambda = params.lambda;
    let data = img
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&i, &b)| i + lambda * (i - b))
        .collect();
    Image::new(img.width(), img.height(), img.channels(), data)
}

/// Unsharp-mask sharpening, clamped to `[0, 1]`.
pub fn unsharp_mask(img: &Image, params: &UsmParams) -> Result<Image> {
    if params.lambda == 0.0 {
        params.validate()?;
        return Ok(img.clone());
    }
    Ok(unsharp_mask_unclamped(img, params)?.clamp_unit())
}
