//! Subcommand implementations and shared task plumbing.

mod ablate;
mod eval;
mod gradcheck;
mod spectrum;
mod train;

pub use ablate::run_ablate;
pub use eval::run_eval;
pub use gradcheck::run_gradcheck;
pub use spectrum::{baseline_spec, run_spectrum};
pub use train::run_train;

use std::error::Error;
use std::path::Path;

use cafe_core::harness::{
    coord_grid_1d, generate_noise_block, image_targets, iou, load_ppm, make_coord_grid,
    make_coord_grid_3d, psnr_values, OccupancyGrid,
};
use cafe_core::model::{FourierSpec, Model, ModelSpec};
use cafe_core::{FeatureMask, Tensor};

use crate::config::{Encoder, RunConfig, Task};

pub type CliError = Box<dyn Error + Send + Sync>;
pub type CliResult<T> = Result<T, CliError>;

fn fail(message: impl Into<String>) -> CliError {
    message.into().into()
}

/// Loaded task: aligned coordinates and targets plus whatever shape
/// metadata the metric needs.
pub struct TaskData {
    pub coords: Tensor,
    pub targets: Tensor,
    pub image_shape: Option<(usize, usize, usize)>,
    pub occupancy: Option<OccupancyGrid>,
}

/// Reads (or synthesizes) the training data for a config.
pub fn load_task_data(cfg: &RunConfig) -> CliResult<TaskData> {
    match cfg.task {
        Task::Image => {
            let path = cfg
                .input
                .as_ref()
                .ok_or_else(|| fail("task `image` needs `input` (a PPM path)"))?;
            let img = load_ppm(path)?;
            Ok(TaskData {
                coords: make_coord_grid(img.width(), img.height()),
                targets: image_targets(&img),
                image_shape: Some((img.width(), img.height(), img.channels())),
                occupancy: None,
            })
        }
        Task::Noiseblock => {
            let img = generate_noise_block(cfg.size, cfg.rho, cfg.seed)?;
            Ok(TaskData {
                coords: make_coord_grid(img.width(), img.height()),
                targets: image_targets(&img),
                image_shape: Some((img.width(), img.height(), 1)),
                occupancy: None,
            })
        }
        Task::Func1d => {
            let path = cfg
                .input
                .as_ref()
                .ok_or_else(|| fail("task `func1d` needs `input` (a two-column x,y CSV)"))?;
            let (coords, targets) = read_xy_csv(path)?;
            Ok(TaskData {
                coords,
                targets,
                image_shape: None,
                occupancy: None,
            })
        }
        Task::Occupancy => {
            let grid = OccupancyGrid::sphere(cfg.res, cfg.radius);
            Ok(TaskData {
                coords: make_coord_grid_3d(cfg.res),
                targets: grid.targets(),
                image_shape: None,
                occupancy: Some(grid),
            })
        }
    }
}

fn read_xy_csv(path: &Path) -> CliResult<(Tensor, Tensor)> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // skip a header row if the first field is not numeric
        let mut parts = line.split(',');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(fail(format!("{}: line {} needs `x,y`", path.display(), idx + 1)));
        };
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if idx == 0 => continue,
            _ => {
                return Err(fail(format!(
                    "{}: line {} has non-numeric fields",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    if xs.is_empty() {
        return Err(fail(format!("{}: no data rows", path.display())));
    }
    let n = xs.len();
    Ok((Tensor::matrix(n, 1, xs)?, Tensor::matrix(n, 1, ys)?))
}

/// Model spec implied by a config and the loaded data.
pub fn model_spec(cfg: &RunConfig, data: &TaskData) -> ModelSpec {
    let input_dim = match cfg.task {
        Task::Image | Task::Noiseblock => 2,
        Task::Func1d => 1,
        Task::Occupancy => 3,
    };
    let output_dim = data.image_shape.map_or(1, |(_, _, c)| c);
    let fourier = match cfg.encoder {
        Encoder::Pe => FourierSpec::Pe {
            m: cfg.num_frequencies,
            base: cfg.base,
        },
        _ => FourierSpec::Rff {
            m: cfg.num_frequencies,
            scale: cfg.scale,
        },
    };
    ModelSpec {
        input_dim,
        fourier,
        cheb_order: cfg.cheb_order,
        parallel_layers: cfg.parallel_layers,
        width: cfg.width,
        mlp_depth: cfg.mlp_depth,
        output_dim,
    }
}

/// Task metric from full-grid predictions: PSNR for image-like tasks,
/// IoU for occupancy, and error expressed in dB for 1-D fits.
pub fn task_metric(model: &Model, cfg: &RunConfig, data: &TaskData) -> CliResult<f64> {
    let preds = model.forward_batch(&data.coords, FeatureMask::None)?;
    match cfg.task {
        Task::Image | Task::Noiseblock => Ok(psnr_values(preds.data(), data.targets.data())?),
        Task::Occupancy => {
            let grid = data.occupancy.as_ref().expect("occupancy data");
            let pred_grid = OccupancyGrid::from_predictions(preds.data(), grid.resolution())?;
            Ok(iou(&pred_grid, grid)?)
        }
        Task::Func1d => {
            let mse = preds
                .data()
                .iter()
                .zip(data.targets.data())
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / preds.numel() as f64;
            Ok(if mse == 0.0 { 99.0 } else { (-10.0 * mse.log10()).min(99.0) })
        }
    }
}

/// Uniform 1-D evaluation grid reused by the spectrum/NTK outputs.
pub fn ntk_inputs(points: usize) -> Tensor {
    coord_grid_1d(points)
}
