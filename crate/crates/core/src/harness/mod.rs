//! Task harness: data ingestion, coordinate grids, the training loop,
//! metrics, synthetic targets, checkpoints and experiment reports.

mod checkpoint;
mod floor;
mod grid;
mod image;
mod metrics;
mod report;
mod synth;
mod train;

pub use checkpoint::{
    checkpoint_bytes, checkpoint_load, checkpoint_save, parse_checkpoint,
};
pub use floor::{least_squares_floor, solve_multi};
pub use grid::{axis_coord, coord_grid_1d, make_coord_grid, make_coord_grid_3d, OccupancyGrid};
pub use image::{load_ppm, parse_ppm, ppm_bytes, save_ppm, ImageGrid};
pub use metrics::{iou, psnr, psnr_values, PSNR_CAP_DB};
pub use report::{report_csv, write_atomic, write_report_csv, ReportRow, REPORT_HEADER};
pub use synth::{
    desk_image, generate_noise_block, image_targets, noise_block_side, predictions_to_image,
    product_sines_target, ramp_checker_target,
};
pub use train::{train, FitReport, TrainConfig};
