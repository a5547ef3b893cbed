//! Training loop: Adam on MSE with a one-milestone learning-rate decay,
//! full-grid or seeded mini-batch sampling, deterministic under the seed.

use std::sync::Arc;
use std::time::Instant;

use crate::adam::{AdamHyper, AdamState};
use crate::encodings::FeatureMask;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Model;
use crate::rng::{stream_rng, RngStream};
use crate::tensor::Tensor;

/// Knobs of one training run. `batch_size` 0 trains on the full grid.
/// `lr_decay_at` None places the single decay milestone at 70% of the
/// iteration budget.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_at: Option<usize>,
    pub batch_size: usize,
    pub seed: u64,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr: 1e-3,
            lr_decay: 0.1,
            lr_decay_at: None,
            batch_size: 0,
            seed: 1,
            log_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn decay_milestone(&self) -> usize {
        self.lr_decay_at.unwrap_or(self.iterations * 7 / 10)
    }

    pub fn echo(&self) -> String {
        format!(
            "iterations = {}\nlr = {}\nlr_decay = {}\nlr_decay_at = {}\nbatch = {}\nseed = {}\nloss = mse\n",
            self.iterations,
            self.lr,
            self.lr_decay,
            self.decay_milestone(),
            self.batch_size,
            self.seed
        )
    }
}

/// Record of one run: sampled loss curve, final full-data loss, the task
/// metric filled in by the caller, wall time and config echo.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub loss_curve: Vec<(usize, f64)>,
    pub final_loss: f64,
    pub final_metric: Option<f64>,
    pub wall_seconds: f64,
    pub seed: u64,
    pub config_echo: String,
}

fn gather_rows(src: &Tensor, indices: &[usize]) -> Tensor {
    let cols = src.cols();
    let mut data = crate::tensor::take_buffer(indices.len() * cols, false);
    for (dst, &i) in data.chunks_exact_mut(cols).zip(indices) {
        dst.copy_from_slice(src.row(i));
    }
    Tensor::matrix(indices.len(), cols, data).expect("gather shape")
}

fn full_data_loss(model: &Model, features: &Arc<Tensor>, targets: &Arc<Tensor>) -> Result<f64> {
    let mut g = Graph::new();
    let f = g.constant(Arc::clone(features));
    let t = g.constant(Arc::clone(targets));
    let pass = model.forward_on_graph(&mut g, f)?;
    let loss = g.mse_loss(pass.output, t)?;
    Ok(g.value(loss).item())
}

/// Runs `cfg.iterations` Adam steps of MSE on the given coordinate/target
/// pairs. Mini-batches are drawn by a seeded shuffle, reshuffled each
/// epoch. Aborts with a diagnostic if the loss turns non-finite.
pub fn train(
    model: &mut Model,
    coords: &Tensor,
    targets: &Tensor,
    cfg: &TrainConfig,
) -> Result<FitReport> {
    if coords.rows() != targets.rows() {
        return Err(Error::ShapeMismatch {
            op: "train",
            lhs: coords.shape().to_vec(),
            rhs: targets.shape().to_vec(),
        });
    }
    if !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be > 0, got {}",
            cfg.lr
        )));
    }
    let start = Instant::now();
    let features = Arc::new(model.encode_batch(coords, FeatureMask::None)?);
    let targets_full = Arc::new(targets.clone());
    let n = coords.rows();
    let batch = if cfg.batch_size == 0 || cfg.batch_size >= n {
        0
    } else {
        cfg.batch_size
    };

    let hyper = AdamHyper {
        lr: cfg.lr,
        ..AdamHyper::default()
    };
    let mut adam = AdamState::new(&model.params(), hyper);
    let milestone = cfg.decay_milestone();

    let mut batch_rng = stream_rng(cfg.seed, RngStream::Batching);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n; // forces an initial shuffle

    let mut loss_curve = Vec::new();
    for iter in 0..cfg.iterations {
        if iter == milestone && cfg.iterations > 0 {
            adam.hyper.lr *= cfg.lr_decay;
        }
        let mut g = Graph::new();
        let (f_id, t_id) = if batch == 0 {
            (
                g.constant(Arc::clone(&features)),
                g.constant(Arc::clone(&targets_full)),
            )
        } else {
            if cursor + batch > n {
                batch_rng.shuffle(&mut order);
                cursor = 0;
            }
            let idx = &order[cursor..cursor + batch];
            cursor += batch;
            (
                g.constant(gather_rows(&features, idx)),
                g.constant(gather_rows(targets, idx)),
            )
        };
        let pass = model.forward_on_graph(&mut g, f_id)?;
        let loss_id = g.mse_loss(pass.output, t_id)?;
        let loss = g.value(loss_id).item();
        if !loss.is_finite() {
            return Err(Error::TrainDiverged { iteration: iter });
        }
        if iter % cfg.log_every == 0 {
            loss_curve.push((iter, loss));
        }
        let mut grads = g.backward(loss_id)?;
        let grad_tensors: Vec<Option<Tensor>> =
            pass.params.iter().map(|&id| grads.take(id)).collect();
        let grad_refs: Vec<Option<&Tensor>> = grad_tensors.iter().map(Option::as_ref).collect();
        adam.step(&mut model.params_mut(), &grad_refs)?;
        for g in grad_tensors.into_iter().flatten() {
            crate::tensor::recycle_buffer(g.into_data());
        }
    }

    let final_loss = full_data_loss(model, &features, &targets_full)?;
    if !final_loss.is_finite() {
        return Err(Error::TrainDiverged {
            iteration: cfg.iterations,
        });
    }
    if cfg.iterations > 0 {
        loss_curve.push((cfg.iterations, final_loss));
    }
    Ok(FitReport {
        loss_curve,
        final_loss,
        final_metric: None,
        wall_seconds: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        config_echo: cfg.echo(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::grid::coord_grid_1d;
    use crate::model::{init_model, FourierSpec, ModelSpec};

    fn small_spec() -> ModelSpec {
        ModelSpec {
            input_dim: 1,
            fourier: FourierSpec::Rff { m: 4, scale: 2.0 },
            cheb_order: 3,
            parallel_layers: 2,
            width: 8,
            mlp_depth: 1,
            output_dim: 1,
        }
    }

    #[test]
    fn zero_iterations_leave_model_unchanged() {
        let mut model = init_model(&small_spec(), 3).unwrap();
        let before = model.clone();
        let coords = coord_grid_1d(16);
        let targets = Tensor::matrix(16, 1, vec![0.5; 16]).unwrap();
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &coords, &targets, &cfg).unwrap();
        assert_eq!(model, before);
        assert!(report.config_echo.contains("iterations = 0"));
        assert!(report.loss_curve.is_empty());
    }

    #[test]
    fn constant_target_learned_by_bias() {
        let mut model = init_model(&small_spec(), 5).unwrap();
        let coords = coord_grid_1d(32);
        let targets = Tensor::matrix(32, 1, vec![0.5; 32]).unwrap();
        let cfg = TrainConfig {
            iterations: 200,
            lr: 2e-2,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &coords, &targets, &cfg).unwrap();
        assert!(report.final_loss < 1e-4, "final loss {}", report.final_loss);
    }

    #[test]
    fn same_seed_identical_loss_curves() {
        let coords = coord_grid_1d(24);
        let targets = Tensor::matrix(
            24,
            1,
            coords.data().iter().map(|&x| 0.5 + 0.3 * x).collect(),
        )
        .unwrap();
        let cfg = TrainConfig {
            iterations: 120,
            batch_size: 8,
            seed: 42,
            ..TrainConfig::default()
        };
        let mut a = init_model(&small_spec(), 42).unwrap();
        let mut b = init_model(&small_spec(), 42).unwrap();
        let ra = train(&mut a, &coords, &targets, &cfg).unwrap();
        let rb = train(&mut b, &coords, &targets, &cfg).unwrap();
        assert_eq!(ra.loss_curve, rb.loss_curve);
        assert_eq!(a, b);
    }

    #[test]
    fn loss_sampled_every_interval() {
        let mut model = init_model(&small_spec(), 7).unwrap();
        let coords = coord_grid_1d(16);
        let targets = Tensor::matrix(16, 1, vec![0.25; 16]).unwrap();
        let cfg = TrainConfig {
            iterations: 120,
            log_every: 50,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &coords, &targets, &cfg).unwrap();
        let iters: Vec<usize> = report.loss_curve.iter().map(|&(i, _)| i).collect();
        assert_eq!(iters, vec![0, 50, 100, 120]);
    }

    #[test]
    fn non_positive_lr_rejected() {
        let mut model = init_model(&small_spec(), 1).unwrap();
        let coords = coord_grid_1d(8);
        let targets = Tensor::matrix(8, 1, vec![0.0; 8]).unwrap();
        let cfg = TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(&mut model, &coords, &targets, &cfg).is_err());
    }

    #[test]
    fn mismatched_rows_rejected() {
        let mut model = init_model(&small_spec(), 1).unwrap();
        let coords = coord_grid_1d(8);
        let targets = Tensor::matrix(9, 1, vec![0.0; 9]).unwrap();
        assert!(train(&mut model, &coords, &targets, &TrainConfig::default()).is_err());
    }
}
