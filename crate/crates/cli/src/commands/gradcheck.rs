use cafe_core::model::{init_model, FourierSpec, ModelSpec};
use cafe_core::rng::{stream_rng, RngStream};
use cafe_core::{audit_model_gradients, Tensor};

use super::CliResult;
use crate::config::{Encoder, RunConfig};

const TOLERANCE: f64 = 1e-6;
const STEP: f64 = 1e-6;

/// Audits every parameter gradient of a small model (sizes capped from
/// the config) against central finite differences.
pub fn run_gradcheck(cfg: &RunConfig) -> CliResult<()> {
    let spec = ModelSpec {
        input_dim: 2,
        fourier: match cfg.encoder {
            Encoder::Pe => FourierSpec::Pe {
                m: cfg.num_frequencies.min(8),
                base: cfg.base,
            },
            _ => FourierSpec::Rff {
                m: cfg.num_frequencies.min(8),
                scale: cfg.scale,
            },
        },
        cheb_order: cfg.cheb_order.min(6),
        parallel_layers: cfg.parallel_layers.min(3),
        width: cfg.width.min(16),
        mlp_depth: cfg.mlp_depth.min(2),
        output_dim: 1,
    };
    let model = init_model(&spec, cfg.seed)?;
    let mut rng = stream_rng(cfg.seed, RngStream::Data);
    let batch = 12;
    let coords = Tensor::matrix(
        batch,
        2,
        (0..batch * 2).map(|_| rng.next_range(-1.0, 1.0)).collect(),
    )?;
    let targets = Tensor::matrix(batch, 1, (0..batch).map(|_| rng.next_f64()).collect())?;
    let err = audit_model_gradients(&model, &coords, &targets, STEP)?;
    println!(
        "gradcheck: {} params, max rel. err {err:.3e} (tolerance {TOLERANCE:.0e})",
        model.count_params()
    );
    if err >= TOLERANCE {
        return Err(format!(
            "gradient audit failed: max relative error {err:.3e} >= {TOLERANCE:.0e}"
        )
        .into());
    }
    Ok(())
}
