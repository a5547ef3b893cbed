//! Dense row-major f64 tensors and the matrix kernels behind the graph ops.

use std::cell::RefCell;

use crate::error::{Error, Result};

// Training rebuilds the compute graph every iteration; recycling its
// large buffers avoids re-faulting fresh pages each pass. Pooling is
// per-thread, so concurrent runs stay independent.
const POOL_MIN_LEN: usize = 4096;
const POOL_MAX_BYTES: usize = 256 << 20;

thread_local! {
    static BUF_POOL: RefCell<(usize, Vec<Vec<f64>>)> = const { RefCell::new((0, Vec::new())) };
}

/// Fetches a length-`len` buffer, recycled when available. With
/// `zeroed` false the contents are arbitrary stale values; the caller
/// must overwrite every element.
pub(crate) fn take_buffer(len: usize, zeroed: bool) -> Vec<f64> {
    if len >= POOL_MIN_LEN {
        let hit = BUF_POOL.with(|p| {
            let (bytes, pool) = &mut *p.borrow_mut();
            pool.iter()
                .position(|v| v.len() == len)
                .map(|idx| {
                    *bytes -= len * 8;
                    pool.swap_remove(idx)
                })
        });
        if let Some(mut v) = hit {
            if zeroed {
                v.fill(0.0);
            }
            return v;
        }
    }
    vec![0.0; len]
}

pub(crate) fn recycle_buffer(v: Vec<f64>) {
    if v.len() < POOL_MIN_LEN {
        return;
    }
    BUF_POOL.with(|p| {
        let (bytes, pool) = &mut *p.borrow_mut();
        if *bytes + v.len() * 8 <= POOL_MAX_BYTES {
            *bytes += v.len() * 8;
            pool.push(v);
        }
    });
}

/// Dense row-major tensor of 64-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::InvalidArgument(format!(
                "shape {:?} wants {} elements, got {}",
                shape,
                numel,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; numel],
        }
    }

    pub fn ones(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![1.0; numel],
        }
    }

    /// Scalar tensor of shape `[1]`.
    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// First element; panics on empty tensors.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    /// Row count of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Elementwise sum into self; shapes must match exactly.
    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }
}

fn check_matrix(t: &Tensor, op: &'static str) -> Result<()> {
    if !t.is_matrix() {
        return Err(Error::ShapeMismatch {
            op,
            lhs: t.shape().to_vec(),
            rhs: vec![],
        });
    }
    Ok(())
}

/// C[m,n] = A[m,k] * B[k,n].
///
/// Row-blocked axpy kernel: six rows of A share each streamed row of B,
/// and every C entry accumulates strictly in k order, so the result is
/// bitwise identical to the textbook triple loop.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_matrix(a, "matmul")?;
    check_matrix(b, "matmul")?;
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut c = take_buffer(m * n, true);
    matmul_into(&mut c, a.data(), b.data(), m, k, n);
    Tensor::matrix(m, n, c)
}

/// `c` must arrive zeroed.
pub(crate) fn matmul_into(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    let mut i = 0;
    while i + 6 <= m {
        let (c01, rest) = c[i * n..(i + 6) * n].split_at_mut(2 * n);
        let (c23, c45) = rest.split_at_mut(2 * n);
        let (c0, c1) = c01.split_at_mut(n);
        let (c2, c3) = c23.split_at_mut(n);
        let (c4, c5) = c45.split_at_mut(n);
        let a0 = &a[i * k..(i + 1) * k];
        let a1 = &a[(i + 1) * k..(i + 2) * k];
        let a2 = &a[(i + 2) * k..(i + 3) * k];
        let a3 = &a[(i + 3) * k..(i + 4) * k];
        let a4 = &a[(i + 4) * k..(i + 5) * k];
        let a5 = &a[(i + 5) * k..(i + 6) * k];
        for kk in 0..k {
            let brow = &b[kk * n..(kk + 1) * n];
            let (x0, x1, x2) = (a0[kk], a1[kk], a2[kk]);
            let (x3, x4, x5) = (a3[kk], a4[kk], a5[kk]);
            for j in 0..n {
                let bv = brow[j];
                c0[j] += x0 * bv;
                c1[j] += x1 * bv;
                c2[j] += x2 * bv;
                c3[j] += x3 * bv;
                c4[j] += x4 * bv;
                c5[j] += x5 * bv;
            }
        }
        i += 6;
    }
    while i < m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (kk, &aik) in arow.iter().enumerate() {
            let brow = &b[kk * n..(kk + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow.iter()) {
                *cv += aik * bv;
            }
        }
        i += 1;
    }
}

/// C[m,n] = A^T * B where A is [k,m] and B is [k,n].
///
/// Accumulates rank-1 updates row by row of the shared leading (k)
/// dimension; used for weight gradients without materializing A^T.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_matrix(a, "matmul_tn")?;
    check_matrix(b, "matmul_tn")?;
    if a.rows() != b.rows() {
        return Err(Error::ShapeMismatch {
            op: "matmul_tn",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (k, m, n) = (a.rows(), a.cols(), b.cols());
    let mut c = take_buffer(m * n, true);
    matmul_tn_into(&mut c, a.data(), b.data(), k, m, n);
    Tensor::matrix(m, n, c)
}

/// `c` must arrive zeroed.
pub(crate) fn matmul_tn_into(c: &mut [f64], a: &[f64], b: &[f64], k: usize, m: usize, n: usize) {
    let mut r = 0;
    while r + 6 <= k {
        let a0 = &a[r * m..(r + 1) * m];
        let a1 = &a[(r + 1) * m..(r + 2) * m];
        let a2 = &a[(r + 2) * m..(r + 3) * m];
        let a3 = &a[(r + 3) * m..(r + 4) * m];
        let a4 = &a[(r + 4) * m..(r + 5) * m];
        let a5 = &a[(r + 5) * m..(r + 6) * m];
        let b0 = &b[r * n..(r + 1) * n];
        let b1 = &b[(r + 1) * n..(r + 2) * n];
        let b2 = &b[(r + 2) * n..(r + 3) * n];
        let b3 = &b[(r + 3) * n..(r + 4) * n];
        let b4 = &b[(r + 4) * n..(r + 5) * n];
        let b5 = &b[(r + 5) * n..(r + 6) * n];
        for i in 0..m {
            let crow = &mut c[i * n..(i + 1) * n];
            let (x0, x1, x2) = (a0[i], a1[i], a2[i]);
            let (x3, x4, x5) = (a3[i], a4[i], a5[i]);
            for j in 0..n {
                crow[j] += (x0 * b0[j] + x1 * b1[j] + x2 * b2[j])
                    + (x3 * b3[j] + x4 * b4[j] + x5 * b5[j]);
            }
        }
        r += 6;
    }
    while r < k {
        let arow = &a[r * m..(r + 1) * m];
        let brow = &b[r * n..(r + 1) * n];
        for (i, &av) in arow.iter().enumerate() {
            let crow = &mut c[i * n..(i + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow.iter()) {
                *cv += av * bv;
            }
        }
        r += 1;
    }
}

/// C[m,n] = A[m,k] * B^T where B is [n,k].
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_matrix(a, "matmul_nt")?;
    check_matrix(b, "matmul_nt")?;
    if a.cols() != b.cols() {
        return Err(Error::ShapeMismatch {
            op: "matmul_nt",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let bt = transpose(b);
    matmul(a, &bt)
}

pub fn transpose(t: &Tensor) -> Tensor {
    let (r, c) = (t.rows(), t.cols());
    let src = t.data();
    let mut out = take_buffer(r * c, false);
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = src[i * c + j];
        }
    }
    Tensor::matrix(c, r, out).expect("transpose preserves element count")
}
