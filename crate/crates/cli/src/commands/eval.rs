use std::fs;

use cafe_core::harness::{checkpoint_load, write_report_csv, ReportRow};

use super::{load_task_data, task_metric, CliResult};
use crate::config::RunConfig;

/// Recomputes the task metric from a checkpoint and the task data.
pub fn run_eval(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg
        .checkpoint
        .as_ref()
        .ok_or("eval needs `checkpoint` (path to a saved model)")?;
    let started = std::time::Instant::now();
    let (model, stored_seed) = checkpoint_load(path)?;
    let data = load_task_data(cfg)?;
    if model.input_dim() != data.coords.cols() {
        return Err(format!(
            "checkpoint expects {}-D coordinates but task `{}` provides {}-D",
            model.input_dim(),
            cfg.task.name(),
            data.coords.cols()
        )
        .into());
    }
    let metric = task_metric(&model, cfg, &data)?;
    fs::create_dir_all(&cfg.out)?;
    write_report_csv(
        cfg.out.join("report.csv"),
        &[ReportRow {
            run_id: "eval".to_string(),
            task: cfg.task.name().to_string(),
            encoder: cfg.encoder.name().to_string(),
            parallel_layers: model.parallel_layers(),
            num_frequencies: model.basis().num_frequencies(),
            cheb_order: model.cheb().order,
            width: cfg.width,
            params: model.count_params(),
            iterations: 0,
            seed: stored_seed,
            final_metric: metric,
            seconds: started.elapsed().as_secs_f64(),
        }],
    )?;
    println!(
        "eval {} on {}: metric {:.4} ({} params, stored seed {})",
        path.display(),
        cfg.task.name(),
        metric,
        model.count_params(),
        stored_seed
    );
    Ok(())
}
