//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter first/second moment estimates plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamHyper,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    /// Zero-initialized moments matching the given parameter shapes.
    pub fn new(params: &[&Tensor], hyper: AdamHyper) -> Self {
        Self {
            hyper,
            m: params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update:
    ///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
    ///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
    /// with m_hat = m / (1 - b1^t), v_hat = v / (1 - b2^t).
    ///
    /// `grads[i] == None` is treated as an all-zero gradient.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Option<&Tensor>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "adam: {} params / {} grads vs state of {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.shape() != self.m[i].shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    lhs: p.shape().to_vec(),
                    rhs: self.m[i].shape().to_vec(),
                });
            }
            if let Some(g) = grads[i] {
                if g.shape() != p.shape() {
                    return Err(Error::ShapeMismatch {
                        op: "adam_step grad",
                        lhs: g.shape().to_vec(),
                        rhs: p.shape().to_vec(),
                    });
                }
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powi(t);
        let bc2 = 1.0 - h.beta2.powi(t);
        for ((p, m), (v, g)) in params
            .iter_mut()
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut().zip(grads.iter()))
        {
            let zero;
            let gdata = match g {
                Some(g) => g.data(),
                None => {
                    zero = vec![0.0; p.numel()];
                    &zero
                }
            };
            for ((pv, mv), (vv, &gv)) in p
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut().iter_mut().zip(gdata))
            {
                *mv = h.beta1 * *mv + (1.0 - h.beta1) * gv;
                *vv = h.beta2 * *vv + (1.0 - h.beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= h.lr * m_hat / (v_hat.sqrt() + h.epsilon);
            }
        }
        Ok(())
    }
}
