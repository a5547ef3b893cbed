//! Empirical spectrum of a 1-D integer-frequency encoder via the
//! discrete Fourier transform, checked against the enumerated
//! admissible set.
//!
//! The DFT is a direct O(G^2) summation; this is an oracle, correctness
//! beats speed at these sizes.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use super::freq::{enumerate_cafe_frequencies, FreqSet, IntFreqVector};
use super::trig::integer_base;
use crate::encodings::FeatureMask;
use crate::error::{Error, Result};
use crate::model::CafeModel;

/// Bins with magnitude above this fraction of the per-coordinate maximum
/// count as active.
pub const ACTIVE_BIN_THRESHOLD: f64 = 1e-8;

/// Active-bin report for each encoder output coordinate.
#[derive(Clone, Debug)]
pub struct SpectrumScan {
    pub grid: usize,
    /// Active frequency bins (cycles per unit) per psi coordinate.
    pub per_coordinate: Vec<BTreeSet<u64>>,
    /// Union of the per-coordinate active bins.
    pub active: BTreeSet<u64>,
    /// Enumerated admissible set for the model's base and layer count.
    pub admissible: FreqSet,
    /// True when every active bin is admissible (the constant bin is
    /// always admissible: bias products put energy at frequency zero).
    pub contained: bool,
}

/// Evaluates every psi coordinate on `grid` uniform points over one unit
/// period, transforms, and thresholds. Requires a 1-D, Fourier-only,
/// integer-frequency model and a grid beyond twice the largest
/// admissible frequency (aliasing guard).
pub fn empirical_spectrum_dft(model: &CafeModel, grid: usize, budget: u64) -> Result<SpectrumScan> {
    if model.input_dim != 1 {
        return Err(Error::InvalidArgument(
            "empirical spectrum requires a 1-D input".into(),
        ));
    }
    if model.cheb.order != 0 {
        return Err(Error::InvalidArgument(
            "empirical spectrum requires a Fourier-only encoder (J = 0)".into(),
        ));
    }
    let raw_base = integer_base(model)?;
    let base: Vec<IntFreqVector> = raw_base
        .into_iter()
        .map(|f| IntFreqVector::canonical(f).0)
        .collect();
    let admissible = enumerate_cafe_frequencies(&base, model.stack.num_layers(), budget)?;
    let max_freq = admissible
        .iter()
        .map(|v| v.components()[0].unsigned_abs())
        .max()
        .unwrap_or(0);
    if grid as u64 <= 2 * max_freq {
        return Err(Error::InvalidArgument(format!(
            "grid {grid} aliases: admissible frequencies reach {max_freq}, need grid > {}",
            2 * max_freq
        )));
    }

    // sample every coordinate of psi over one period
    let width = model.width();
    let mut samples = vec![vec![0.0; grid]; width];
    for g in 0..grid {
        let x = g as f64 / grid as f64;
        let psi = model.encode(&[x], FeatureMask::None)?;
        for (coord, &v) in samples.iter_mut().zip(psi.iter()) {
            coord[g] = v;
        }
    }

    let mut per_coordinate = Vec::with_capacity(width);
    let mut active = BTreeSet::new();
    for signal in &samples {
        let half = grid / 2;
        let mut mags = Vec::with_capacity(half + 1);
        for k in 0..=half {
            let (mut re, mut im) = (0.0, 0.0);
            for (g, &v) in signal.iter().enumerate() {
                let angle = TAU * (k * g) as f64 / grid as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            mags.push((re * re + im * im).sqrt());
        }
        let peak = mags.iter().copied().fold(0.0f64, f64::max);
        let bins: BTreeSet<u64> = mags
            .iter()
            .enumerate()
            .filter(|&(_, &m)| peak > 0.0 && m > ACTIVE_BIN_THRESHOLD * peak)
            .map(|(k, _)| k as u64)
            .collect();
        active.extend(bins.iter().copied());
        per_coordinate.push(bins);
    }

    let contained = active
        .iter()
        .all(|&k| k == 0 || admissible.contains_components(&[k as i64]));
    Ok(SpectrumScan {
        grid,
        per_coordinate,
        active,
        admissible,
        contained,
    })
}
