//! Fixtures shared by the criterion benchmarks.

use crackbench::rng::SplitMix64;
use crackbench::Image;

/// Uniform random grayscale image.
pub fn random_gray(size: usize, seed: u64) -> Image {
    let mut rng = SplitMix64::new(seed);
    Image::from_fn(size, size, 1, |_, _, _| rng.next_f64()).expect("valid image")
}
