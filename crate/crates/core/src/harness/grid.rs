//! Coordinate grids paired row-major with task values, and binary
//! occupancy grids for the 3-D task.
//!
//! Pixel centers map to x_i = -1 + (2i+1)/W per axis, so every
//! coordinate lies strictly inside (-1, 1).

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn axis_coord(i: usize, size: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / size as f64
}

/// [n, 1] pixel-center coordinates.
pub fn coord_grid_1d(n: usize) -> Tensor {
    Tensor::matrix(n, 1, (0..n).map(|i| axis_coord(i, n)).collect()).expect("grid shape")
}

/// [W*H, 2] coordinates ordered row-major to match image data:
/// row y*W + x holds [x_norm, y_norm].
pub fn make_coord_grid(width: usize, height: usize) -> Tensor {
    let mut data = Vec::with_capacity(width * height * 2);
    for y in 0..height {
        let yn = axis_coord(y, height);
        for x in 0..width {
            data.push(axis_coord(x, width));
            data.push(yn);
        }
    }
    Tensor::matrix(width * height, 2, data).expect("grid shape")
}

/// [R^3, 3] cell-center coordinates ordered to match occupancy data:
/// cell (z*R + y)*R + x holds [x_norm, y_norm, z_norm].
pub fn make_coord_grid_3d(resolution: usize) -> Tensor {
    let r = resolution;
    let mut data = Vec::with_capacity(r * r * r * 3);
    for z in 0..r {
        let zn = axis_coord(z, r);
        for y in 0..r {
            let yn = axis_coord(y, r);
            for x in 0..r {
                data.push(axis_coord(x, r));
                data.push(yn);
                data.push(zn);
            }
        }
    }
    Tensor::matrix(r * r * r, 3, data).expect("grid shape")
}

/// Binary occupancy over an R^3 voxel grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyGrid {
    resolution: usize,
    data: Vec<u8>,
}

impl OccupancyGrid {
    pub fn new(resolution: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != resolution.pow(3) {
            return Err(Error::InvalidArgument(format!(
                "occupancy grid of resolution {resolution} wants {} cells, got {}",
                resolution.pow(3),
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("occupancy values must be 0 or 1".into()));
        }
        Ok(Self { resolution, data })
    }

    /// Sphere of the given radius (normalized units) centered at the origin.
    pub fn sphere(resolution: usize, radius: f64) -> Self {
        let r = resolution;
        let mut data = Vec::with_capacity(r * r * r);
        for z in 0..r {
            for y in 0..r {
                for x in 0..r {
                    let (xc, yc, zc) = (axis_coord(x, r), axis_coord(y, r), axis_coord(z, r));
                    let inside = (xc * xc + yc * yc + zc * zc).sqrt() <= radius;
                    data.push(inside as u8);
                }
            }
        }
        Self { resolution: r, data }
    }

    /// Thresholds raw predictions at 0.5.
    pub fn from_predictions(preds: &[f64], resolution: usize) -> Result<Self> {
        Self::new(
            resolution,
            preds.iter().map(|&v| (v >= 0.5) as u8).collect(),
        )
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn occupied_count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    /// Cell values as an [N, 1] training target.
    pub fn targets(&self) -> Tensor {
        Tensor::matrix(self.data.len(), 1, self.data.iter().map(|&v| v as f64).collect())
            .expect("target shape")
    }
}
