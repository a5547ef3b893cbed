//! Reconstruction metrics: PSNR for [0,1] signals and IoU for occupancy.

use super::grid::OccupancyGrid;
use super::image::ImageGrid;
use crate::error::{Error, Result};

/// PSNR values are capped here; exact reconstructions report 99 dB
/// instead of infinity.
pub const PSNR_CAP_DB: f64 = 99.0;

/// -10 log10(MSE) with peak 1.0; predictions are clamped to [0, 1]
/// before the error is taken.
pub fn psnr_values(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch {
            op: "psnr",
            lhs: vec![pred.len()],
            rhs: vec![reference.len()],
        });
    }
    let mse: f64 = pred
        .iter()
        .zip(reference)
        .map(|(&p, &t)| {
            let d = p.clamp(0.0, 1.0) - t;
            d * d
        })
        .sum::<f64>()
        / pred.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP_DB))
}

pub fn psnr(pred: &ImageGrid, reference: &ImageGrid) -> Result<f64> {
    if pred.width() != reference.width()
        || pred.height() != reference.height()
        || pred.channels() != reference.channels()
    {
        return Err(Error::ShapeMismatch {
            op: "psnr",
            lhs: vec![pred.width(), pred.height(), pred.channels()],
            rhs: vec![reference.width(), reference.height(), reference.channels()],
        });
    }
    psnr_values(pred.data(), reference.data())
}

/// Intersection over union of two occupancy grids; both empty counts as 1.
pub fn iou(pred: &OccupancyGrid, reference: &OccupancyGrid) -> Result<f64> {
    if pred.resolution() != reference.resolution() {
        return Err(Error::ShapeMismatch {
            op: "iou",
            lhs: vec![pred.resolution()],
            rhs: vec![reference.resolution()],
        });
    }
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (&a, &b) in pred.data().iter().zip(reference.data()) {
        intersection += (a == 1 && b == 1) as usize;
        union += (a == 1 || b == 1) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}
