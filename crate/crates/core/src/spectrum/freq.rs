//! Integer frequency vectors and the admissible-set enumeration for the
//! parallel-linear Hadamard encoder.
//!
//! A product of N affine maps over sinusoidal features can only place
//! energy at signed sums of at most N base frequencies. Both equivalent
//! constructions of that set are implemented and cross-checked: the union
//! over subset sizes I = 1..N with signs in {-1, +1}, and the single
//! N-term form with signs in {-1, 0, +1} (the all-zero sign assignment is
//! excluded; the constant offset contributed by bias products is handled
//! separately by the containment checks).

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Frequency vector with integer components, stored in canonical sign:
/// the first nonzero component is positive (w and -w carry the same
/// magnitude spectrum).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntFreqVector(Vec<i64>);

impl IntFreqVector {
    /// Canonicalizes the sign; the flag reports whether it was flipped.
    pub fn canonical(mut components: Vec<i64>) -> (Self, bool) {
        let flip = components.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0);
        if flip {
            for c in &mut components {
                *c = -*c;
            }
        }
        (Self(components), flip)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

/// Ordered set of canonical integer frequency vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreqSet(BTreeSet<IntFreqVector>);

impl FreqSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts after canonicalization.
    pub fn insert(&mut self, components: Vec<i64>) {
        let (v, _) = IntFreqVector::canonical(components);
        self.0.insert(v);
    }

    pub fn contains(&self, v: &IntFreqVector) -> bool {
        self.0.contains(v)
    }

    pub fn contains_components(&self, components: &[i64]) -> bool {
        let (v, _) = IntFreqVector::canonical(components.to_vec());
        self.0.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IntFreqVector> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &FreqSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union_with(&mut self, other: &FreqSet) {
        for v in &other.0 {
            self.0.insert(v.clone());
        }
    }
}

impl FromIterator<Vec<i64>> for FreqSet {
    fn from_iter<T: IntoIterator<Item = Vec<i64>>>(iter: T) -> Self {
        let mut s = FreqSet::new();
        for v in iter {
            s.insert(v);
        }
        s
    }
}

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

fn check_base(base: &[IntFreqVector], layers: usize, budget: u64) -> Result<usize> {
    if base.is_empty() {
        return Err(Error::InvalidArgument("base frequency set is empty".into()));
    }
    if layers == 0 {
        return Err(Error::InvalidArgument("layer count must be >= 1".into()));
    }
    let dim = base[0].dim();
    if base.iter().any(|v| v.dim() != dim) {
        return Err(Error::InvalidArgument("mixed frequency dimensions".into()));
    }
    let mut needed: u64 = 1;
    for _ in 0..layers {
        needed = needed.saturating_mul(base.len() as u64);
    }
    for _ in 1..layers {
        needed = needed.saturating_mul(3);
    }
    if needed > budget {
        return Err(Error::BudgetExceeded {
            what: "frequency enumeration",
            needed,
            budget,
        });
    }
    Ok(dim)
}

fn add(a: &[i64], b: &[i64], sign: i64) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + sign * y).collect()
}

/// Signed-sum form: { sum_i s_i w_{k_i} : s_i in {-1, 0, +1} }, excluding
/// the all-zero sign assignment, canonicalized. Partial sums are deduped
/// level by level, so the cost is bounded by the distinct-sum count.
pub fn enumerate_signed_form(
    base: &[IntFreqVector],
    layers: usize,
    budget: u64,
) -> Result<FreqSet> {
    let dim = check_base(base, layers, budget)?;
    // (partial sum, at least one nonzero sign picked so far)
    let mut partials: BTreeSet<(Vec<i64>, bool)> = BTreeSet::new();
    partials.insert((vec![0; dim], false));
    for _ in 0..layers {
        let mut next = BTreeSet::new();
        for (sum, picked) in &partials {
            next.insert((sum.clone(), *picked));
            for w in base {
                next.insert((add(sum, w.components(), 1), true));
                next.insert((add(sum, w.components(), -1), true));
            }
        }
        partials = next;
    }
    Ok(partials
        .into_iter()
        .filter_map(|(sum, picked)| picked.then_some(sum))
        .collect())
}

/// Union form: for each I = 1..N, sums of exactly I terms with signs in
/// {-1, +1}, canonicalized, united over I.
pub fn enumerate_union_form(base: &[IntFreqVector], layers: usize, budget: u64) -> Result<FreqSet> {
    let dim = check_base(base, layers, budget)?;
    let mut result = FreqSet::new();
    let mut partials: BTreeSet<Vec<i64>> = BTreeSet::new();
    partials.insert(vec![0; dim]);
    for _ in 0..layers {
        let mut next = BTreeSet::new();
        for sum in &partials {
            for w in base {
                next.insert(add(sum, w.components(), 1));
                next.insert(add(sum, w.components(), -1));
            }
        }
        for sum in &next {
            result.insert(sum.clone());
        }
        partials = next;
    }
    Ok(result)
}

/// Admissible frequency set of an N-layer encoder over the given base,
/// computed by both constructions, which are asserted equal.
pub fn enumerate_cafe_frequencies(
    base: &[IntFreqVector],
    layers: usize,
    budget: u64,
) -> Result<FreqSet> {
    let signed = enumerate_signed_form(base, layers, budget)?;
    let union = enumerate_union_form(base, layers, budget)?;
    assert_eq!(
        signed, union,
        "the two admissible-set constructions must coincide"
    );
    Ok(signed)
}

/// Convenience constructor for 1-D bases.
pub fn base_1d(freqs: &[i64]) -> Vec<IntFreqVector> {
    freqs
        .iter()
        .map(|&f| IntFreqVector::canonical(vec![f]).0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn scalar_set(set: &FreqSet) -> Vec<i64> {
        set.iter().map(|v| v.components()[0]).collect()
    }

    #[test]
    fn canonical_sign_flips() {
        let (v, flipped) = IntFreqVector::canonical(vec![0, -2, 5]);
        assert!(flipped);
        assert_eq!(v.components(), &[0, 2, -5]);
        let (z, flipped) = IntFreqVector::canonical(vec![0, 0]);
        assert!(!flipped);
        assert!(z.is_zero());
    }

    #[test]
    fn single_frequency_two_layers() {
        let set = enumerate_cafe_frequencies(&base_1d(&[1]), 2, 1_000_000).unwrap();
        assert_eq!(scalar_set(&set), vec![0, 1, 2]);
    }

    #[test]
    fn two_frequencies_two_layers() {
        let set = enumerate_cafe_frequencies(&base_1d(&[1, 2]), 2, 1_000_000).unwrap();
        assert_eq!(scalar_set(&set), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_layer_reproduces_base() {
        let base = base_1d(&[3, 7]);
        let set = enumerate_cafe_frequencies(&base, 1, 1_000_000).unwrap();
        assert_eq!(scalar_set(&set), vec![3, 7]);
    }

    /// Independent oracle: enumerate every (sign, index) tuple directly.
    fn brute_force(base: &[IntFreqVector], layers: usize) -> FreqSet {
        let dim = base[0].dim();
        let mut out = FreqSet::new();
        let choices = 2 * base.len() + 1; // +w, -w per base entry, or skip
        let total = choices.pow(layers as u32);
        for code in 0..total {
            let mut c = code;
            let mut sum = vec![0i64; dim];
            let mut picked = false;
            for _ in 0..layers {
                let pick = c % choices;
                c /= choices;
                if pick > 0 {
                    picked = true;
                    let idx = (pick - 1) / 2;
                    let sign = if pick % 2 == 1 { 1 } else { -1 };
                    sum = add(&sum, base[idx].components(), sign);
                }
            }
            if picked {
                out.insert(sum);
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_oracle_on_random_bases() {
        let mut rng = SplitMix64::new(404);
        for _ in 0..50 {
            let dim = 1 + rng.next_below(2);
            let count = 1 + rng.next_below(3);
            let layers = 1 + rng.next_below(3);
            let base: Vec<IntFreqVector> = (0..count)
                .map(|_| {
                    let comps: Vec<i64> =
                        (0..dim).map(|_| rng.next_below(11) as i64 - 5).collect();
                    IntFreqVector::canonical(comps).0
                })
                .collect();
            let fast = enumerate_cafe_frequencies(&base, layers, 10_000_000).unwrap();
            let slow = brute_force(&base, layers);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn both_theorem_forms_agree_on_random_configurations() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..50 {
            let count = 1 + rng.next_below(3);
            let layers = 1 + rng.next_below(3);
            let freqs: Vec<i64> = (0..count).map(|_| 1 + rng.next_below(5) as i64).collect();
            let base = base_1d(&freqs);
            let signed = enumerate_signed_form(&base, layers, 10_000_000).unwrap();
            let union = enumerate_union_form(&base, layers, 10_000_000).unwrap();
            assert_eq!(signed, union);
        }
    }

    #[test]
    fn budget_guard() {
        let base = base_1d(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        assert!(matches!(
            enumerate_cafe_frequencies(&base, 8, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn empty_base_rejected() {
        assert!(enumerate_cafe_frequencies(&[], 2, 1000).is_err());
    }
}
