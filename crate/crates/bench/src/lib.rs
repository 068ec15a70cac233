//! Seeded fixtures shared by the benchmarks.

use flarecast_core::image::Image;
use flarecast_core::metrics::GrayImage;
use flarecast_core::segmentation::RadiationMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Translator canvas size.
pub const CANVAS: (usize, usize) = (512, 1024);

pub fn noise_gray(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::new(
        width,
        height,
        (0..width * height)
            .map(|_| rng.random_range(0.0..=255.0f64).round())
            .collect(),
    )
    .expect("nonempty dimensions")
}

pub fn noise_rgb(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(width, height, 3, |_, _, _| rng.random())
}

/// Two-class mask holding one ellipse, roughly flame-shaped.
pub fn ellipse_mask(width: usize, height: usize, dx: f64) -> RadiationMask {
    let (cx, cy) = (width as f64 / 2.0 + dx, height as f64 * 0.55);
    let (a, b) = (width as f64 * 0.2, height as f64 * 0.35);
    RadiationMask::from_fn(width, height, 2, |x, y| {
        let (u, v) = ((x as f64 + 0.5 - cx) / a, (y as f64 + 0.5 - cy) / b);
        (u * u + v * v <= 1.0) as u8
    })
    .expect("label ids within class count")
}
