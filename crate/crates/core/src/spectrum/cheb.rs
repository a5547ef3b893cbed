//! Chebyshev order-set recursions and sparse polynomials in the
//! first-kind Chebyshev basis.
//!
//! Everything rests on the product identity
//! T_p(x) T_q(x) = (T_{p+q}(x) + T_{|p-q|}(x)) / 2.

use std::collections::{BTreeMap, BTreeSet};

use crate::encodings::chebyshev_recursion;
use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped from symbolic
/// polynomials, separating exact cancellation from floating-point dust.
pub const COEFF_PRUNE_EPS: f64 = 1e-14;

/// Set of non-negative polynomial orders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChebOrderSet(BTreeSet<u64>);

impl ChebOrderSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, order: u64) {
        self.0.insert(order);
    }

    pub fn contains(&self, order: u64) -> bool {
        self.0.contains(&order)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &ChebOrderSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<u64> for ChebOrderSet {
    fn from_iter<T: IntoIterator<Item = u64>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Orders reachable by the k-th power of a span of T_j, plus the integer
/// combination set that bounds them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChebPowerOrders {
    /// S_k: S_1 = J, S_{k+1} = { h+j, |h-j| : h in S_k, j in J }.
    pub orders: ChebOrderSet,
    /// Bound set: { |sum c_j j| : c_j integers, sum |c_j| <= k }.
    pub bound: ChebOrderSet,
}

/// Runs the power recursion for S_k, computes the bound set, and asserts
/// the containment S_k subset-of bound.
pub fn cheb_power_orders(j: &ChebOrderSet, k: u32) -> Result<ChebPowerOrders> {
    if k == 0 {
        return Err(Error::InvalidArgument("power k must be >= 1".into()));
    }
    if j.is_empty() {
        return Err(Error::InvalidArgument("order set is empty".into()));
    }
    let mut orders: BTreeSet<u64> = j.0.clone();
    for _ in 1..k {
        let mut next = BTreeSet::new();
        for &h in &orders {
            for &jj in &j.0 {
                next.insert(h + jj);
                next.insert(h.abs_diff(jj));
            }
        }
        orders = next;
    }
    // reachable signed sums with at most k terms
    let mut sums: BTreeSet<i64> = BTreeSet::new();
    sums.insert(0);
    for _ in 0..k {
        let mut next = sums.clone();
        for &s in &sums {
            for &jj in &j.0 {
                next.insert(s + jj as i64);
                next.insert(s - jj as i64);
            }
        }
        sums = next;
    }
    let bound: ChebOrderSet = sums.into_iter().map(|s| s.unsigned_abs()).collect();
    let orders = ChebOrderSet(orders);
    assert!(
        orders.is_subset(&bound),
        "power recursion escaped the integer-combination bound"
    );
    Ok(ChebPowerOrders { orders, bound })
}

/// Sparse polynomial sum c_j T_j(x); zero coefficients are pruned.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseChebPoly(BTreeMap<u64, f64>);

impl SparseChebPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(order: u64, coeff: f64) -> Self {
        let mut p = Self::default();
        p.add_term(order, coeff);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut p = Self::default();
        for (order, coeff) in terms {
            p.add_term(order, coeff);
        }
        p
    }

    pub fn add_term(&mut self, order: u64, coeff: f64) {
        let entry = self.0.entry(order).or_insert(0.0);
        *entry += coeff;
        if entry.abs() < COEFF_PRUNE_EPS {
            self.0.remove(&order);
        }
    }

    pub fn coeff(&self, order: u64) -> f64 {
        self.0.get(&order).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> ChebOrderSet {
        self.0.keys().copied().collect()
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.0.iter().map(|(&o, &c)| (o, c))
    }

    /// Product in the Chebyshev basis via the product-to-sum rule.
    pub fn multiply(&self, other: &SparseChebPoly) -> SparseChebPoly {
        let mut out = SparseChebPoly::default();
        for (&p, &a) in &self.0 {
            for (&q, &b) in &other.0 {
                let half = 0.5 * a * b;
                out.add_term(p + q, half);
                out.add_term(p.abs_diff(q), half);
            }
        }
        out
    }

    /// Pointwise value via the three-term recursion up to the max order.
    pub fn eval(&self, x: f64) -> f64 {
        let Some(&max_order) = self.0.keys().next_back() else {
            return 0.0;
        };
        let mut table = vec![0.0; max_order as usize + 1];
        chebyshev_recursion(x, &mut table);
        self.0
            .iter()
            .map(|(&o, &c)| c * table[o as usize])
            .sum()
    }
}

/// Exact product of two Chebyshev-basis polynomials; the support obeys
/// the product lemma's index set { p+q, |p-q| }.
pub fn symbolic_cheb_multiply(p: &SparseChebPoly, q: &SparseChebPoly) -> SparseChebPoly {
    p.multiply(q)
}
