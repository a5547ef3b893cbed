use std::fs;

use cafe_core::harness::{
    checkpoint_save, predictions_to_image, save_ppm, write_atomic, write_report_csv, FitReport,
    ReportRow, TrainConfig,
};
use cafe_core::model::{init_model, Model};
use cafe_core::FeatureMask;

use super::{load_task_data, model_spec, task_metric, CliResult, TaskData};
use crate::config::{RunConfig, Task};

pub fn report_row(cfg: &RunConfig, model: &Model, report: &FitReport, run_id: &str) -> ReportRow {
    ReportRow {
        run_id: run_id.to_string(),
        task: cfg.task.name().to_string(),
        encoder: cfg.encoder.name().to_string(),
        parallel_layers: cfg.parallel_layers,
        num_frequencies: model.basis().num_frequencies(),
        cheb_order: cfg.cheb_order,
        width: cfg.width,
        params: model.count_params(),
        iterations: cfg.iterations,
        seed: cfg.seed,
        final_metric: report.final_metric.unwrap_or(f64::NAN),
        seconds: report.wall_seconds,
    }
}

/// Trains one model per the config; emits checkpoint, loss curve,
/// report CSV, resolved-config echo, and a reconstruction for image
/// tasks.
pub fn run_train(cfg: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(&cfg.out)?;
    let data = load_task_data(cfg)?;
    let spec = model_spec(cfg, &data);
    let mut model = init_model(&spec, cfg.seed)?;
    let train_cfg = TrainConfig {
        iterations: cfg.iterations,
        lr: cfg.lr,
        lr_decay: cfg.lr_decay,
        lr_decay_at: cfg.lr_decay_at,
        batch_size: cfg.batch,
        seed: cfg.seed,
        log_every: 50,
    };
    let mut report = cafe_core::harness::train(&mut model, &data.coords, &data.targets, &train_cfg)?;
    report.final_metric = Some(task_metric(&model, cfg, &data)?);
    report.config_echo = cfg.echo();

    write_artifacts(cfg, &model, &report, &data)?;
    println!(
        "trained {} on {}: {} params, final loss {:.6e}, metric {:.4}, {:.1}s",
        cfg.encoder.name(),
        cfg.task.name(),
        model.count_params(),
        report.final_loss,
        report.final_metric.unwrap_or(f64::NAN),
        report.wall_seconds
    );
    Ok(())
}

pub fn write_artifacts(
    cfg: &RunConfig,
    model: &Model,
    report: &FitReport,
    data: &TaskData,
) -> CliResult<()> {
    checkpoint_save(model, cfg.seed, cfg.out.join("checkpoint.ckpt"))?;
    write_atomic(cfg.out.join("config_resolved.txt"), report.config_echo.as_bytes())?;

    let mut curve = String::from("iter,loss\n");
    for (iter, loss) in &report.loss_curve {
        curve.push_str(&format!("{iter},{loss:.12e}\n"));
    }
    write_atomic(cfg.out.join("loss_curve.csv"), curve.as_bytes())?;

    write_report_csv(
        cfg.out.join("report.csv"),
        &[report_row(cfg, model, report, "train")],
    )?;

    if matches!(cfg.task, Task::Image | Task::Noiseblock) {
        let (w, h, _) = data.image_shape.expect("image tasks carry a shape");
        let preds = model.forward_batch(&data.coords, FeatureMask::None)?;
        let recon = predictions_to_image(&preds, w, h)?;
        save_ppm(&recon, cfg.out.join("recon.ppm"))?;
    }
    Ok(())
}
