//! Image representation and the preprocessing stage: file IO, resizing,
//! grayscale conversion and per-channel mean-centering.

mod pnm;
mod resize;

pub use pnm::{decode_pnm, encode_pnm, load_image, save_image};
pub use resize::resize_bilinear;

use crate::{Error, Result};

/// Luma weights applied to (R, G, B).
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Input sizes of the three reference network families.
pub const RESNET101_INPUT: usize = 224;
pub const ALEXNET_INPUT: usize = 227;
pub const INCEPTION_V3_INPUT: usize = 229;

/// A `width × height × channels` raster, row-major with interleaved channels.
///
/// Intensities are nominally in `[0, 1]`; only finiteness is enforced on
/// construction so intermediate results (for example a mean-centred image)
/// can share the type. [`save_image`] enforces the `[0, 1]` range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "{width}x{height}x{channels} image needs {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn from_gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    /// Builds an image from a per-pixel function `f(x, y, c)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Sample with replicate (edge-clamp) padding.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, c: usize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y, c)
    }

    /// Copies one channel out as a grayscale image.
    pub fn channel(&self, c: usize) -> Image {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Reassembles an image from same-sized grayscale planes.
    pub fn from_channels(planes: &[Image]) -> Result<Image> {
        let first = planes
            .first()
            .ok_or_else(|| Error::invalid("no channel planes"))?;
        let (w, h) = first.dims();
        if planes.iter().any(|p| p.dims() != (w, h) || p.channels != 1) {
            return Err(Error::invalid("channel planes differ in shape"));
        }
        let n = planes.len();
        let mut data = vec![0.0; w * h * n];
        for (c, p) in planes.iter().enumerate() {
            for (i, v) in p.data.iter().enumerate() {
                data[i * n + c] = *v;
            }
        }
        Image::new(w, h, n, data)
    }

    /// Applies a grayscale operation to every channel independently.
    pub fn map_channels(&self, mut f: impl FnMut(&Image) -> Result<Image>) -> Result<Image> {
        if self.channels == 1 {
            return f(self);
        }
        let planes = (0..self.channels)
            .map(|c| f(&self.channel(c)))
            .collect::<Result<Vec<_>>>()?;
        Image::from_channels(&planes)
    }

    pub fn clamp_unit(mut self) -> Image {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// Collapses RGB to luma; grayscale input is returned unchanged.
pub fn to_gray(img: &Image) -> Image {
    if img.channels == 1 {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            // (v, v, v) has to come back as v: the weights do not sum to
            // exactly 1.0 in binary, so work relative to the green sample.
            let g = p[1];
            g + LUMA[0] * (p[0] - g) + LUMA[2] * (p[2] - g)
        })
        .collect();
    Image {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Also divide each channel by its standard deviation.
    pub scale_variance: bool,
}

/// A mean-centred image together with what is needed to undo the centring.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub base: Image,
    pub channel_means: Vec<f64>,
    /// Per-channel divisor; all 1.0 unless variance scaling was requested.
    pub channel_scales: Vec<f64>,
}

impl NormalizedImage {
    pub fn dims(&self) -> (usize, usize) {
        self.base.dims()
    }

    pub fn denormalize(&self) -> Image {
        let n = self.base.channels;
        let data = self
            .base
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.channel_scales[i % n] + self.channel_means[i % n])
            .collect();
        Image {
            data,
            ..self.base.clone()
        }
    }
}

pub fn normalize(img: &Image) -> NormalizedImage {
    normalize_with(img, NormalizeOptions::default())
}

pub fn normalize_with(img: &Image, opts: NormalizeOptions) -> NormalizedImage {
    let n = img.channels;
    let count = (img.width * img.height) as f64;
    // Accumulate offsets from the first sample so constant channels are exact.
    let first: Vec<f64> = img.data[..n].to_vec();
    let mut means = vec![0.0; n];
    for (i, v) in img.data.iter().enumerate() {
        means[i % n] += v - first[i % n];
    }
    for (m, f) in means.iter_mut().zip(&first) {
        *m = f + *m / count;
    }
    let mut data: Vec<f64> = img
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| v - means[i % n])
        .collect();

    // One correction pass removes the rounding residue of the first mean.
    let mut residue = vec![0.0; n];
    for (i, v) in data.iter().enumerate() {
        residue[i % n] += v;
    }
    for (i, v) in data.iter_mut().enumerate() {
        *v -= residue[i % n] / count;
    }

    let mut scales = vec![1.0; n];
    if opts.scale_variance {
        let mut var = vec![0.0; n];
        for (i, v) in data.iter().enumerate() {
            var[i % n] += v * v;
        }
        for (s, v) in scales.iter_mut().zip(&var) {
            let sd = (v / count).sqrt();
            if sd > 0.0 {
                *s = sd;
            }
        }
        for (i, v) in data.iter_mut().enumerate() {
            *v /= scales[i % n];
        }
    }

    NormalizedImage {
        base: Image {
            data,
            ..img.clone()
        },
        channel_means: means,
        channel_scales: scales,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut r = SplitMix64::new(seed);
        Image::from_fn(w, h, c, |_, _, _| r.next_f64()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, 2, vec![0.0; 2]).is_err());
        assert!(Image::new(0, 1, 1, vec![]).is_err());
        assert!(Image::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn gray_passthrough_and_weights() {
        let g = random(4, 3, 1, 1);
        assert_eq!(to_gray(&g), g);

        let white = Image::new(1, 1, 3, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(to_gray(&white).data(), &[1.0]);
        let red = Image::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((to_gray(&red).data()[0] - 0.299).abs() < 1e-12);
    }

    #[test]
    fn gray_of_neutral_pixels() {
        let mut r = SplitMix64::new(3);
        for _ in 0..1000 {
            let v = r.next_f64();
            let img = Image::new(1, 1, 3, vec![v, v, v]).unwrap();
            assert!((to_gray(&img).data()[0] - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalize_constant_and_symmetric() {
        let c = Image::filled(3, 3, 1, 0.4).unwrap();
        let n = normalize(&c);
        assert!(n.base.data().iter().all(|v| *v == 0.0));
        assert_eq!(n.channel_means, vec![0.4]);

        let two = Image::from_gray(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(normalize(&two).base.data(), &[-0.5, 0.5]);
    }

    #[test]
    fn normalize_zero_mean_and_invertible() {
        for seed in 0..20 {
            let img = random(17, 9, 3, seed);
            let n = normalize(&img);
            for c in 0..3 {
                let plane = n.base.channel(c);
                let mean: f64 = plane.data().iter().sum::<f64>() / plane.data().len() as f64;
                assert!(mean.abs() < 1e-9);
            }
            let back = n.denormalize();
            for (a, b) in back.data().iter().zip(img.data()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn variance_scaling_gives_unit_variance() {
        let img = random(16, 16, 1, 5);
        let n = normalize_with(
            &img,
            NormalizeOptions {
                scale_variance: true,
            },
        );
        let var: f64 = n.base.data().iter().map(|v| v * v).sum::<f64>() / 256.0;
        assert!((var - 1.0).abs() < 1e-12);
        let back = n.denormalize();
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn channel_split_roundtrip() {
        let img = random(5, 4, 3, 8);
        let planes: Vec<_> = (0..3).map(|c| img.channel(c)).collect();
        assert_eq!(Image::from_channels(&planes).unwrap(), img);
    }
}
