use std::fs;
use std::sync::Mutex;

use cafe_core::harness::{write_report_csv, ReportRow, TrainConfig};
use cafe_core::model::init_model;

use super::train::report_row;
use super::{load_task_data, model_spec, task_metric, CliResult};
use crate::config::{AblateAxis, Encoder, RunConfig};

fn apply_axis(cfg: &mut RunConfig, axis: AblateAxis, value: f64) -> Result<(), String> {
    match axis {
        AblateAxis::ParallelLayers => {
            let n = value as usize;
            if n == 0 || !matches!(cfg.encoder, Encoder::Cafe | Encoder::CafePlus) {
                return Err(format!(
                    "axis N needs a stacked encoder and values >= 1 (got {value} for {})",
                    cfg.encoder.name()
                ));
            }
            cfg.parallel_layers = n;
        }
        AblateAxis::MlpDepth => cfg.mlp_depth = value as usize,
        AblateAxis::Scale => {
            if value <= 0.0 {
                return Err(format!("axis scale needs positive values, got {value}"));
            }
            cfg.scale = value;
        }
        // J = 0 inside a sweep degrades cafeplus to plain cafe; allowed
        // so order sweeps can include the no-Chebyshev endpoint.
        AblateAxis::ChebOrder => cfg.cheb_order = value as usize,
    }
    Ok(())
}

fn single_run(cfg: &RunConfig, run_id: &str) -> CliResult<ReportRow> {
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
    Ok(report_row(cfg, &model, &report, run_id))
}

/// Sweeps one declared axis over the declared values with everything
/// else frozen (seed included). Runs fan out over up to CAFE_THREADS
/// workers; rows are written in axis order regardless of completion.
pub fn run_ablate(cfg: &RunConfig) -> CliResult<()> {
    let axis = cfg.axis.ok_or("ablate needs `axis` (N, mlp, scale or J)")?;
    if cfg.values.is_empty() {
        return Err("ablate needs `values` (comma-separated sweep points)".into());
    }
    let threads: usize = std::env::var("CAFE_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1)
        .max(1);

    let mut configs = Vec::with_capacity(cfg.values.len());
    for &value in &cfg.values {
        let mut derived = cfg.clone();
        apply_axis(&mut derived, axis, value)?;
        configs.push((value, derived));
    }

    let results: Vec<Mutex<Option<CliResult<ReportRow>>>> =
        (0..configs.len()).map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(configs.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= configs.len() {
                    break;
                }
                let (value, derived) = &configs[idx];
                let id = format!("{}={}", axis.name(), value);
                let row = single_run(derived, &id);
                *results[idx].lock().expect("result slot") = Some(row);
            });
        }
    });

    let mut rows = Vec::with_capacity(configs.len());
    for slot in results {
        match slot.into_inner().expect("result slot").expect("worker filled slot") {
            Ok(row) => rows.push(row),
            Err(e) => return Err(e),
        }
    }
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("ablate.csv");
    write_report_csv(&path, &rows)?;
    for row in &rows {
        println!("{}: metric {:.4} ({} params)", row.run_id, row.final_metric, row.params);
    }
    println!("wrote {}", path.display());
    Ok(())
}
