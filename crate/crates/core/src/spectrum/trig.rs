//! Sparse trigonometric polynomials over integer frequencies and the
//! exact symbolic expansion of the parallel-linear Hadamard encoder.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::cheb::COEFF_PRUNE_EPS;
use super::freq::{enumerate_cafe_frequencies, FreqSet, IntFreqVector};
use crate::error::{Error, Result};
use crate::model::CafeModel;

/// Sine and cosine coefficients at one canonical frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrigCoeff {
    pub sin: f64,
    pub cos: f64,
}

/// Finite sum of s_w sin(2 pi w.x) + c_w cos(2 pi w.x) over canonical
/// integer frequencies. Terms at the zero frequency keep only their
/// cosine part (the sine vanishes identically); negative-signed
/// frequencies are folded in by negating the sine coefficient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseTrigPoly {
    dim: usize,
    terms: BTreeMap<IntFreqVector, TrigCoeff>,
}

impl SparseTrigPoly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], 0.0, value);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Adds s sin(2 pi w.x) + c cos(2 pi w.x), canonicalizing the sign.
    pub fn add_term(&mut self, freq: Vec<i64>, sin: f64, cos: f64) {
        debug_assert_eq!(freq.len(), self.dim);
        let (canon, flipped) = IntFreqVector::canonical(freq);
        let sin = if flipped { -sin } else { sin };
        let sin = if canon.is_zero() { 0.0 } else { sin };
        let entry = self.terms.entry(canon.clone()).or_default();
        entry.sin += sin;
        entry.cos += cos;
        if entry.sin.abs() < COEFF_PRUNE_EPS {
            entry.sin = 0.0;
        }
        if entry.cos.abs() < COEFF_PRUNE_EPS {
            entry.cos = 0.0;
        }
        if entry.sin == 0.0 && entry.cos == 0.0 {
            self.terms.remove(&canon);
        }
    }

    pub fn coeff(&self, freq: &[i64]) -> TrigCoeff {
        let (canon, flipped) = IntFreqVector::canonical(freq.to_vec());
        let c = self.terms.get(&canon).copied().unwrap_or_default();
        if flipped {
            TrigCoeff {
                sin: -c.sin,
                cos: c.cos,
            }
        } else {
            c
        }
    }

    pub fn support(&self) -> FreqSet {
        let mut s = FreqSet::new();
        for f in self.terms.keys() {
            s.insert(f.components().to_vec());
        }
        s
    }

    pub fn terms(&self) -> impl Iterator<Item = (&IntFreqVector, &TrigCoeff)> {
        self.terms.iter()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (f, c) in &self.terms {
            out.add_term(f.components().to_vec(), factor * c.sin, factor * c.cos);
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (f, c) in &other.terms {
            self.add_term(f.components().to_vec(), c.sin, c.cos);
        }
    }

    /// Exact product via the trigonometric product-to-sum identities.
    /// Each term pair at frequencies u, v contributes at u+v and u-v:
    ///   at u+v: cos += (cu cv - su sv)/2, sin += (su cv + cu sv)/2
    ///   at u-v: cos += (cu cv + su sv)/2, sin += (su cv - cu sv)/2.
    pub fn multiply(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let sum: Vec<i64> = u
                    .components()
                    .iter()
                    .zip(v.components())
                    .map(|(x, y)| x + y)
                    .collect();
                let diff: Vec<i64> = u
                    .components()
                    .iter()
                    .zip(v.components())
                    .map(|(x, y)| x - y)
                    .collect();
                out.add_term(
                    sum,
                    0.5 * (a.sin * b.cos + a.cos * b.sin),
                    0.5 * (a.cos * b.cos - a.sin * b.sin),
                );
                out.add_term(
                    diff,
                    0.5 * (a.sin * b.cos - a.cos * b.sin),
                    0.5 * (a.cos * b.cos + a.sin * b.sin),
                );
            }
        }
        out
    }

    /// Pointwise value at a coordinate.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .map(|(f, c)| {
                let theta: f64 = TAU
                    * f.components()
                        .iter()
                        .zip(x)
                        .map(|(&w, &xi)| w as f64 * xi)
                        .sum::<f64>();
                c.sin * theta.sin() + c.cos * theta.cos()
            })
            .sum()
    }
}

/// Exact product of two sparse trig polynomials.
pub fn symbolic_trig_multiply(p: &SparseTrigPoly, q: &SparseTrigPoly) -> SparseTrigPoly {
    p.multiply(q)
}

/// Symbolic expansion of an integer-frequency encoder.
#[derive(Clone, Debug)]
pub struct CafeExpansion {
    /// One polynomial per encoder output coordinate.
    pub polys: Vec<SparseTrigPoly>,
    /// Union of the per-coordinate supports.
    pub support: FreqSet,
    /// Enumerated admissible set for the same base and layer count.
    pub admissible: FreqSet,
}

/// Rounds the model's frequency matrix to integer rows, preserving signs,
/// or errors if any entry is farther than 1e-9 from an integer.
pub fn integer_base(model: &CafeModel) -> Result<Vec<Vec<i64>>> {
    let omega = model.basis.omega();
    let dim = omega.cols();
    let mut base = Vec::with_capacity(omega.rows());
    for r in 0..omega.rows() {
        let mut comps = Vec::with_capacity(dim);
        for &v in omega.row(r) {
            let rounded = v.round();
            if (v - rounded).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "frequency entry {v} is not an integer"
                )));
            }
            comps.push(rounded as i64);
        }
        base.push(comps);
    }
    Ok(base)
}

/// Expands psi(x) = prod_i (W_i Phi(x) + b_i) symbolically, per output
/// coordinate, for a Fourier-only model with integer frequencies.
///
/// Asserts that every synthesized frequency lies in the enumerated
/// admissible set (plus the constant: bias products always contribute a
/// frequency-zero offset, already enumerated whenever N >= 2).
pub fn expand_cafe_symbolically(model: &CafeModel, budget: u64) -> Result<CafeExpansion> {
    if model.cheb.order != 0 {
        return Err(Error::InvalidArgument(
            "symbolic expansion covers Fourier-only encoders (J = 0)".into(),
        ));
    }
    let raw_base = integer_base(model)?;
    let dim = model.input_dim;
    let layers = model.stack.num_layers();
    let canonical_base: Vec<IntFreqVector> = raw_base
        .iter()
        .map(|f| IntFreqVector::canonical(f.clone()).0)
        .collect();
    let admissible = enumerate_cafe_frequencies(&canonical_base, layers, budget)?;
    let m = model.basis.num_frequencies();

    let mut polys = Vec::with_capacity(model.width());
    let mut support = FreqSet::new();
    for j in 0..model.width() {
        let mut product: Option<SparseTrigPoly> = None;
        for layer in &model.stack.layers {
            let row = layer.weight.row(j);
            let mut factor = SparseTrigPoly::constant(dim, layer.bias.data()[j]);
            for (i, freq) in raw_base.iter().enumerate() {
                // columns 0..M weight sines, M..2M weight cosines; add_term
                // folds negative-signed rows into canonical form.
                factor.add_term(freq.clone(), row[i], 0.0);
                factor.add_term(freq.clone(), 0.0, row[m + i]);
            }
            product = Some(match product {
                None => factor,
                Some(acc) => acc.multiply(&factor),
            });
        }
        let poly = product.expect("stack is non-empty");
        support.union_with(&poly.support());
        polys.push(poly);
    }

    let mut admissible_with_dc = admissible.clone();
    admissible_with_dc.insert(vec![0; dim]);
    assert!(
        support.is_subset(&admissible_with_dc),
        "symbolic support escaped the admissible frequency set"
    );
    Ok(CafeExpansion {
        polys,
        support,
        admissible,
    })
}
