//! Fixed-basis least-squares floor: the smallest MSE any linear readout
//! of a frozen Fourier feature basis can reach on given data. Separates
//! what a basis covers from what an encoder can synthesize.

use crate::encodings::{fourier_encode, FrequencyBasis};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const RIDGE: f64 = 1e-10;
const MAX_FEATURES: usize = 2048;
const MAX_ELEMENTS: usize = 50_000_000;

/// Solves the ridge-regularized normal equations for a linear readout of
/// [Phi_FF(x), 1] and returns the residual mean squared error over all
/// target columns.
pub fn least_squares_floor(
    basis: &FrequencyBasis,
    coords: &Tensor,
    targets: &Tensor,
) -> Result<f64> {
    if coords.rows() != targets.rows() {
        return Err(Error::ShapeMismatch {
            op: "least_squares_floor",
            lhs: coords.shape().to_vec(),
            rhs: targets.shape().to_vec(),
        });
    }
    let n = coords.rows();
    let f = basis.feature_len() + 1; // bias column
    if f > MAX_FEATURES || n * f > MAX_ELEMENTS {
        return Err(Error::BudgetExceeded {
            what: "least_squares_floor",
            needed: (n * f) as u64,
            budget: MAX_ELEMENTS as u64,
        });
    }

    // design matrix rows: [fourier features | 1]
    let mut design = Vec::with_capacity(n * f);
    for r in 0..n {
        let enc = fourier_encode(coords.row(r), basis)?;
        design.extend_from_slice(enc.values());
        design.push(1.0);
    }
    let a = Tensor::matrix(n, f, design)?;

    // G = A^T A + ridge I, rhs = A^T y (one column per target channel)
    let mut gram = crate::tensor::matmul_tn(&a, &a)?;
    for i in 0..f {
        gram.data_mut()[i * f + i] += RIDGE;
    }
    let rhs = crate::tensor::matmul_tn(&a, targets)?;
    let coeffs = solve_multi(&gram, &rhs)?;

    let fitted = crate::tensor::matmul(&a, &coeffs)?;
    let mse = fitted
        .data()
        .iter()
        .zip(targets.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / targets.numel() as f64;
    Ok(mse)
}

/// Gaussian elimination with partial pivoting for multiple right-hand
/// sides; `matrix` is square [n, n], `rhs` is [n, k].
pub fn solve_multi(matrix: &Tensor, rhs: &Tensor) -> Result<Tensor> {
    let n = matrix.rows();
    if matrix.cols() != n || rhs.rows() != n {
        return Err(Error::ShapeMismatch {
            op: "solve",
            lhs: matrix.shape().to_vec(),
            rhs: rhs.shape().to_vec(),
        });
    }
    let k = rhs.cols();
    let mut a = matrix.data().to_vec();
    let mut b = rhs.data().to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .expect("finite pivots")
            })
            .expect("non-empty range");
        if a[pivot_row * n + col].abs() < 1e-300 {
            return Err(Error::InvalidArgument("singular system".into()));
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            for j in 0..k {
                b.swap(col * k + j, pivot_row * k + j);
            }
        }
        let pivot = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            for j in 0..k {
                b[row * k + j] -= factor * b[col * k + j];
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = a[col * n + col];
        for j in 0..k {
            let mut acc = b[col * k + j];
            for jj in (col + 1)..n {
                acc -= a[col * n + jj] * b[jj * k + j];
            }
            b[col * k + j] = acc / pivot;
        }
    }
    Tensor::matrix(n, k, b)
}
