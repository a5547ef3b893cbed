//! Central finite differences: the independent oracle for every autodiff
//! gradient in this crate.

use std::sync::Arc;

use crate::encodings::FeatureMask;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Model;
use crate::tensor::Tensor;

/// Relative-error denominators are floored here, so gradients smaller
/// than the floor are compared absolutely (tolerance * floor).
pub const REL_ERROR_FLOOR: f64 = 1e-3;

/// Central-difference gradients (f(p+h) - f(p-h)) / (2h), one coordinate
/// at a time, of a scalar function of a parameter list.
pub fn finite_diff_grad<F>(mut f: F, params: &[Tensor], h: f64) -> Result<Vec<Tensor>>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::InvalidArgument(format!("step h must be > 0, got {h}")));
    }
    let mut work: Vec<Tensor> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut grad = Tensor::zeros(params[pi].shape().to_vec());
        for ci in 0..params[pi].numel() {
            let orig = work[pi].data()[ci];
            work[pi].data_mut()[ci] = orig + h;
            let plus = f(&work)?;
            work[pi].data_mut()[ci] = orig - h;
            let minus = f(&work)?;
            work[pi].data_mut()[ci] = orig;
            grad.data_mut()[ci] = (plus - minus) / (2.0 * h);
        }
        grads.push(grad);
    }
    Ok(grads)
}

/// Largest relative error between two gradient lists. Denominators are
/// floored at `floor` so near-zero gradients compare absolutely.
pub fn max_rel_error(analytic: &[Tensor], numeric: &[Tensor], floor: f64) -> f64 {
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        for (&x, &y) in a.data().iter().zip(n.data()) {
            let rel = (x - y).abs() / x.abs().max(y.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Audits every parameter gradient of the MSE loss of a model against
/// central finite differences; returns the worst relative error.
pub fn audit_model_gradients(
    model: &Model,
    coords: &Tensor,
    targets: &Tensor,
    h: f64,
) -> Result<f64> {
    let features = Arc::new(model.encode_batch(coords, FeatureMask::None)?);
    let targets = Arc::new(targets.clone());

    let mut g = Graph::new();
    let f = g.constant(Arc::clone(&features));
    let t = g.constant(Arc::clone(&targets));
    let pass = model.forward_on_graph(&mut g, f)?;
    let loss = g.mse_loss(pass.output, t)?;
    let mut grads = g.backward(loss)?;
    let analytic: Vec<Tensor> = pass
        .params
        .iter()
        .map(|&id| {
            grads
                .take(id)
                .unwrap_or_else(|| Tensor::zeros(g.value(id).shape().to_vec()))
        })
        .collect();

    let params: Vec<Tensor> = model.params().into_iter().cloned().collect();
    let mut scratch = model.clone();
    let numeric = finite_diff_grad(
        |p| {
            for (dst, src) in scratch.params_mut().into_iter().zip(p) {
                *dst = src.clone();
            }
            let mut g = Graph::new();
            let f = g.constant(Arc::clone(&features));
            let t = g.constant(Arc::clone(&targets));
            let pass = scratch.forward_on_graph(&mut g, f)?;
            let loss = g.mse_loss(pass.output, t)?;
            Ok(g.value(loss).item())
        },
        &params,
        h,
    )?;
    Ok(max_rel_error(&analytic, &numeric, REL_ERROR_FLOOR))
}
