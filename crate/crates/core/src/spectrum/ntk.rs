//! Empirical neural tangent kernel: the Gram matrix of parameter
//! gradients of a scalar-output model across a batch of inputs.

use std::sync::Arc;

use crate::encodings::FeatureMask;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Model;
use crate::tensor::{matmul_nt, Tensor};

/// Budgets guarding the O(B^2 P) kernel assembly.
#[derive(Clone, Copy, Debug)]
pub struct NtkBudget {
    pub max_inputs: usize,
    pub max_params: usize,
}

impl Default for NtkBudget {
    fn default() -> Self {
        Self {
            max_inputs: 256,
            max_params: 10_000,
        }
    }
}

/// Symmetric PSD Gram matrix K[a][b] = <grad_theta f(x_a), grad_theta f(x_b)>.
#[derive(Clone, Debug)]
pub struct NtkMatrix {
    matrix: Tensor,
}

impl NtkMatrix {
    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.size();
        let d = self.matrix.data();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                worst = worst.max((d[a * n + b] - d[b * n + a]).abs());
            }
        }
        worst
    }

    /// Eigenvalues in descending order, via cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eigs = symmetric_eigenvalues(&self.matrix);
        eigs.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        eigs
    }
}

/// Per-input jacobian rows -> Gram matrix. Exposed so small closed-form
/// cases can be checked directly.
pub fn ntk_from_jacobians(jacobians: &Tensor) -> Result<NtkMatrix> {
    Ok(NtkMatrix {
        matrix: matmul_nt(jacobians, jacobians)?,
    })
}

/// Computes the kernel by one backward pass per input.
pub fn compute_ntk(model: &Model, inputs: &Tensor, budget: NtkBudget) -> Result<NtkMatrix> {
    if model.output_dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "ntk needs a scalar-output model, got output dim {}",
            model.output_dim()
        )));
    }
    if !inputs.is_matrix() || inputs.cols() != model.input_dim() {
        return Err(Error::InvalidArgument(format!(
            "inputs must be [B, {}], got {:?}",
            model.input_dim(),
            inputs.shape()
        )));
    }
    let b = inputs.rows();
    let p = model.count_params();
    if b > budget.max_inputs || p > budget.max_params {
        return Err(Error::BudgetExceeded {
            what: "ntk",
            needed: (b * p) as u64,
            budget: (budget.max_inputs * budget.max_params) as u64,
        });
    }

    let mut jac = vec![0.0; b * p];
    for a in 0..b {
        let coords = Tensor::matrix(1, inputs.cols(), inputs.row(a).to_vec())?;
        let features = model.encode_batch(&coords, FeatureMask::None)?;
        let mut g = Graph::new();
        let f = g.constant(Arc::new(features));
        let pass = model.forward_on_graph(&mut g, f)?;
        let mut grads = g.backward(pass.output)?;
        let row = &mut jac[a * p..(a + 1) * p];
        let mut offset = 0;
        for &pid in &pass.params {
            let grad = grads.take(pid);
            let len = g.value(pid).numel();
            if let Some(grad) = grad {
                row[offset..offset + len].copy_from_slice(grad.data());
            }
            offset += len;
        }
        debug_assert_eq!(offset, p);
    }
    ntk_from_jacobians(&Tensor::matrix(b, p, jac)?)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
pub fn symmetric_eigenvalues(matrix: &Tensor) -> Vec<f64> {
    let n = matrix.rows();
    assert_eq!(n, matrix.cols(), "eigenvalues need a square matrix");
    let mut a = matrix.data().to_vec();
    let idx = |r: usize, c: usize| r * n + c;
    for _sweep in 0..60 {
        let mut off = 0.0;
        for r in 0..n {
            for c in (r + 1)..n {
                off += a[idx(r, c)] * a[idx(r, c)];
            }
        }
        let scale: f64 = a.iter().map(|v| v * v).sum();
        if off <= 1e-26 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[idx(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, FourierSpec, ModelSpec};
    use crate::rng::SplitMix64;

    #[test]
    fn one_parameter_linear_model_outer_product() {
        // f(x) = w x: jacobian rows are [x_a], so K = [[1, 2], [2, 4]]
        let jac = Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap();
        let k = ntk_from_jacobians(&jac).unwrap();
        assert_eq!(k.matrix().data(), &[1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1
        let m = Tensor::matrix(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let mut eigs = symmetric_eigenvalues(&m);
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] - 1.0).abs() < 1e-10);
        assert!((eigs[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn small_model_kernel_symmetric_and_psd() {
        let spec = ModelSpec {
            input_dim: 1,
            fourier: FourierSpec::Rff { m: 4, scale: 2.0 },
            cheb_order: 3,
            parallel_layers: 2,
            width: 8,
            mlp_depth: 1,
            output_dim: 1,
        };
        let model = init_model(&spec, 5).unwrap();
        let mut rng = SplitMix64::new(6);
        let inputs =
            Tensor::matrix(24, 1, (0..24).map(|_| rng.next_range(-1.0, 1.0)).collect()).unwrap();
        let k = compute_ntk(&model, &inputs, NtkBudget::default()).unwrap();
        assert!(k.max_asymmetry() < 1e-10);
        let eigs = k.eigenvalues();
        let max = eigs[0];
        let min = *eigs.last().unwrap();
        assert!(min >= -1e-8 * max, "min {min} max {max}");
    }

    #[test]
    fn budget_guard() {
        let spec = ModelSpec {
            input_dim: 1,
            fourier: FourierSpec::Rff { m: 4, scale: 2.0 },
            cheb_order: 0,
            parallel_layers: 1,
            width: 4,
            mlp_depth: 0,
            output_dim: 1,
        };
        let model = init_model(&spec, 1).unwrap();
        let inputs = Tensor::matrix(4, 1, vec![0.0, 0.1, 0.2, 0.3]).unwrap();
        let tiny = NtkBudget {
            max_inputs: 2,
            max_params: 10,
        };
        assert!(matches!(
            compute_ntk(&model, &inputs, tiny),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
