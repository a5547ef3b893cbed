//! Deterministic synthetic targets: the noise-block family, a mixed
//! frequency desk-scale test image, and 1-D calibration signals.

use std::f64::consts::TAU;

use super::grid::{axis_coord, coord_grid_1d};
use super::image::ImageGrid;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, RngStream};
use crate::tensor::Tensor;

/// Side length of the centered noise square for a given area ratio.
pub fn noise_block_side(size: usize, rho: f64) -> usize {
    (rho.sqrt() * size as f64).round() as usize
}

/// Square image whose centered block of area ratio `rho` is filled with
/// seeded uniform noise in [0, 1] over a zero background:
/// image = mask * noise + (1 - mask) * smooth, smooth = 0.
pub fn generate_noise_block(size: usize, rho: f64, seed: u64) -> Result<ImageGrid> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "noise ratio must lie in (0, 1], got {rho}"
        )));
    }
    if size == 0 {
        return Err(Error::InvalidArgument("image size must be >= 1".into()));
    }
    let side = noise_block_side(size, rho);
    let start = (size - side) / 2;
    let mut rng = stream_rng(seed, RngStream::Data);
    let mut data = vec![0.0; size * size];
    for y in start..start + side {
        for x in start..start + side {
            data[y * size + x] = rng.next_f64();
        }
    }
    ImageGrid::new(size, size, 1, data)
}

/// Deterministic grayscale test target with natural-image statistics:
/// a smooth background plus a seeded broadband texture whose amplitude
/// falls off like 1/f across log-spaced frequencies and orientations,
/// with rings, a sharp-edged rectangle and a fine checkerboard patch.
/// Reconstruction quality hinges on covering many distinct frequencies
/// at once, not on memorizing a few.
pub fn desk_image(size: usize, seed: u64) -> ImageGrid {
    let mut rng = stream_rng(seed, RngStream::Data);
    // broadband field: log-spaced radial frequencies, random orientation
    // and phase per component, 1/f amplitude envelope
    let components = 48;
    let gratings: Vec<(f64, f64, f64, f64)> = (0..components)
        .map(|k| {
            let mag = 2.0 * (28.0f64 / 2.0).powf(k as f64 / (components - 1) as f64);
            let angle = rng.next_range(0.0, TAU);
            let phase = rng.next_range(0.0, TAU);
            let amp = 1.0 / mag.powf(0.35);
            (mag * angle.cos(), mag * angle.sin(), phase, amp)
        })
        .collect();
    let amp_norm: f64 = gratings.iter().map(|g| g.3).sum();

    let mut data = Vec::with_capacity(size * size);
    for yi in 0..size {
        let y = axis_coord(yi, size);
        for xi in 0..size {
            let x = axis_coord(xi, size);
            // smooth non-periodic background: ramp, saddle and a bowl
            // (polynomial structure), plus two Gaussian blobs
            let mut v = 0.44 + 0.22 * x - 0.13 * y + 0.13 * x * y + 0.07 * (2.0 * x * x - 1.0);
            v += 0.18 * (-((x + 0.45).powi(2) + (y + 0.40).powi(2)) / 0.10).exp();
            v -= 0.15 * (-((x - 0.55).powi(2) + (y + 0.55).powi(2)) / 0.025).exp();
            // broadband texture
            let t: f64 = gratings
                .iter()
                .map(|&(u, w, phase, amp)| amp * (TAU * (u * x + w * y) + phase).sin())
                .sum();
            v += 0.62 * t / amp_norm;
            // concentric rings around (0.25, -0.05)
            let r = ((x - 0.25).powi(2) + (y + 0.05).powi(2)).sqrt();
            v += 0.09 * (TAU * 5.5 * r).sin() * (-(r * r) / 0.34).exp();
            // checkerboard patch, 4-pixel cells, upper-right
            if (0.15..0.85).contains(&x) && (-0.9..-0.3).contains(&y) {
                let cell = ((xi / 4) + (yi / 4)) % 2;
                v += if cell == 0 { 0.12 } else { -0.12 };
            }
            // sharp-edged dark rectangle
            if (-0.75..-0.45).contains(&x) && (-0.8..-0.55).contains(&y) {
                v -= 0.22;
            }
            data.push(v.clamp(0.02, 0.98));
        }
    }
    ImageGrid::new(size, size, 1, data).expect("desk image shape")
}

/// f(x) = sin(2 pi f1 x) sin(2 pi f2 x) sampled on n uniform points over
/// one period [0, 1). Returns (coords [n,1], targets [n,1]).
pub fn product_sines_target(n: usize, f1: u32, f2: u32) -> (Tensor, Tensor) {
    let coords: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let targets: Vec<f64> = coords
        .iter()
        .map(|&x| (TAU * f1 as f64 * x).sin() * (TAU * f2 as f64 * x).sin())
        .collect();
    (
        Tensor::matrix(n, 1, coords).expect("coord shape"),
        Tensor::matrix(n, 1, targets).expect("target shape"),
    )
}

/// Smooth ramp plus a square-wave checkerboard: the 1-D analog of a
/// global gradient overlaid with fine detail. `checker_cycles` is in
/// cycles per unit coordinate (domain [-1, 1] spans two units).
pub fn ramp_checker_target(n: usize, checker_cycles: f64) -> (Tensor, Tensor) {
    let coords = coord_grid_1d(n);
    let targets: Vec<f64> = coords
        .data()
        .iter()
        .map(|&x| {
            let ramp = 0.5 + 0.35 * x;
            let square = if (TAU * checker_cycles * x).sin() >= 0.0 { 0.12 } else { -0.12 };
            ramp + square
        })
        .collect();
    let targets = Tensor::matrix(n, 1, targets).expect("target shape");
    (coords, targets)
}

/// Image pixels as an [N, C] training target, row-major to match
/// `make_coord_grid`.
pub fn image_targets(image: &ImageGrid) -> Tensor {
    Tensor::matrix(
        image.width() * image.height(),
        image.channels(),
        image.data().to_vec(),
    )
    .expect("image target shape")
}

/// Reassembles predictions into an image, clamping into [0, 1].
pub fn predictions_to_image(preds: &Tensor, width: usize, height: usize) -> Result<ImageGrid> {
    ImageGrid::new(width, height, preds.cols(), preds.data().to_vec())
}
