//! Coordinate encodings: random Fourier features, positional encoding,
//! and first-kind Chebyshev features.
//!
//! Frequencies are stored in cycles per unit coordinate; the sinusoid
//! argument carries an explicit 2 pi factor. Feature vectors are blocked:
//! all sines, then all cosines, then Chebyshev entries in dimension-major
//! order. Task coordinates are expected in [-1, 1] per axis.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

/// How a frequency matrix was constructed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisOrigin {
    /// Rows sampled i.i.d. from an isotropic Gaussian of the given scale.
    Rff { scale: f64, seed: u64 },
    /// Geometric ladder base^(i/M) along each axis.
    Pe { base: f64 },
}

/// Matrix of frequency vectors (rows) plus sampling metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBasis {
    omega: Tensor,
    origin: BasisOrigin,
}

impl FrequencyBasis {
    /// Builds a basis from an explicit frequency matrix (rows x dim).
    pub fn from_matrix(omega: Tensor, origin: BasisOrigin) -> Result<Self> {
        if !omega.is_matrix() || omega.rows() == 0 || omega.cols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "frequency matrix must be a non-empty matrix, got shape {:?}",
                omega.shape()
            )));
        }
        if !omega.all_finite() {
            return Err(Error::InvalidArgument(
                "frequency matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self { omega, origin })
    }

    pub fn omega(&self) -> &Tensor {
        &self.omega
    }

    pub fn origin(&self) -> BasisOrigin {
        self.origin
    }

    /// Realized number of frequency rows. Equals M for RFF and M*D for PE.
    pub fn num_frequencies(&self) -> usize {
        self.omega.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.omega.cols()
    }

    /// Length of the Fourier feature block this basis produces.
    pub fn feature_len(&self) -> usize {
        2 * self.num_frequencies()
    }
}

/// M x D frequencies sampled from N(0, scale^2), seeded and reproducible.
pub fn sample_rff(m: usize, dim: usize, scale: f64, seed: u64) -> Result<FrequencyBasis> {
    if m == 0 || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "rff needs M >= 1 and D >= 1, got M={m}, D={dim}"
        )));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("rff scale must be > 0, got {scale}")));
    }
    let mut rng = SplitMix64::new(seed);
    let data = (0..m * dim).map(|_| scale * rng.next_gaussian()).collect();
    FrequencyBasis::from_matrix(
        Tensor::matrix(m, dim, data)?,
        BasisOrigin::Rff { scale, seed },
    )
}

/// Positional encoding ladder: rows base^(i/M) e_d for i = 0..M-1 and each
/// axis d, M*D rows in total (i-major within each axis block).
pub fn make_pe(m: usize, dim: usize, base: f64) -> Result<FrequencyBasis> {
    if m == 0 || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "pe needs M >= 1 and D >= 1, got M={m}, D={dim}"
        )));
    }
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::InvalidArgument(format!("pe base must be > 0, got {base}")));
    }
    let mut data = vec![0.0; m * dim * dim];
    for d in 0..dim {
        for i in 0..m {
            let row = d * m + i;
            data[row * dim + d] = base.powf(i as f64 / m as f64);
        }
    }
    FrequencyBasis::from_matrix(Tensor::matrix(m * dim, dim, data)?, BasisOrigin::Pe { base })
}

/// Number of Chebyshev polynomials per input dimension (degrees 0..J-1).
/// J = 0 yields an empty feature block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChebyshevConfig {
    pub order: usize,
}

impl ChebyshevConfig {
    pub fn new(order: usize) -> Self {
        Self { order }
    }

    pub fn feature_len(&self, dim: usize) -> usize {
        dim * self.order
    }
}

/// Encoded feature vector with recorded block boundaries: the Fourier
/// block occupies `[0, fourier_len)`, the Chebyshev block the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    fourier_len: usize,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index where the Chebyshev block starts (= 2M).
    pub fn fourier_len(&self) -> usize {
        self.fourier_len
    }

    pub fn chebyshev_len(&self) -> usize {
        self.values.len() - self.fourier_len
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_point(x: &[f64], dim: usize, op: &'static str) -> Result<()> {
    if x.len() != dim {
        return Err(Error::ShapeMismatch {
            op,
            lhs: vec![x.len()],
            rhs: vec![dim],
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{op}: non-finite coordinate")));
    }
    Ok(())
}

/// [sin(2 pi w_i . x) | cos(2 pi w_i . x)] over all frequency rows,
/// sine block first.
pub fn fourier_encode(x: &[f64], basis: &FrequencyBasis) -> Result<FeatureVector> {
    check_point(x, basis.input_dim(), "fourier_encode")?;
    let m = basis.num_frequencies();
    let mut values = vec![0.0; 2 * m];
    for (i, row) in basis.omega.data().chunks_exact(basis.input_dim()).enumerate() {
        let theta = TAU * dot(row, x);
        values[i] = theta.sin();
        values[m + i] = theta.cos();
    }
    Ok(FeatureVector {
        values,
        fourier_len: 2 * m,
    })
}

/// Jacobian of `fourier_encode` with respect to x, shape [2M, D]:
/// d sin(2 pi w.x)/dx = 2 pi cos(2 pi w.x) w, and the cosine rows mirror it.
pub fn fourier_encode_jacobian(x: &[f64], basis: &FrequencyBasis) -> Result<Tensor> {
    check_point(x, basis.input_dim(), "fourier_encode_jacobian")?;
    let (m, d) = (basis.num_frequencies(), basis.input_dim());
    let mut jac = vec![0.0; 2 * m * d];
    for (i, row) in basis.omega.data().chunks_exact(d).enumerate() {
        let theta = TAU * dot(row, x);
        let (s, c) = (theta.sin(), theta.cos());
        for (j, &w) in row.iter().enumerate() {
            jac[i * d + j] = TAU * c * w;
            jac[(m + i) * d + j] = -TAU * s * w;
        }
    }
    Tensor::matrix(2 * m, d, jac)
}

/// Tolerance band for coordinates marginally outside [-1, 1]; anything
/// farther out is a hard domain error.
pub const CHEB_DOMAIN_TOLERANCE: f64 = 1e-9;

/// Degrees 0..J-1 per dimension via the three-term recursion
/// T_{j+2}(x) = 2x T_{j+1}(x) - T_j(x), laid out dimension-major.
pub fn chebyshev_encode(x: &[f64], cfg: &ChebyshevConfig) -> Result<FeatureVector> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("chebyshev_encode: non-finite coordinate".into()));
    }
    let j = cfg.order;
    let mut values = Vec::with_capacity(x.len() * j);
    for &raw in x {
        if raw.abs() > 1.0 + CHEB_DOMAIN_TOLERANCE {
            return Err(Error::ChebyshevDomain { value: raw });
        }
        let xc = raw.clamp(-1.0, 1.0);
        let start = values.len();
        values.resize(start + j, 0.0);
        chebyshev_recursion(xc, &mut values[start..]);
    }
    Ok(FeatureVector {
        values,
        fourier_len: 0,
    })
}

/// Fills `out` with T_0(x)..T_{J-1}(x).
pub fn chebyshev_recursion(x: f64, out: &mut [f64]) {
    if let Some(v) = out.get_mut(0) {
        *v = 1.0;
    }
    if let Some(v) = out.get_mut(1) {
        *v = x;
    }
    for idx in 2..out.len() {
        out[idx] = 2.0 * x * out[idx - 1] - out[idx - 2];
    }
}

/// Fourier block first, Chebyshev block second; the boundary is recorded
/// for later masking.
pub fn concat_features(ff: FeatureVector, cf: FeatureVector) -> FeatureVector {
    let fourier_len = ff.values.len();
    let mut values = ff.values;
    values.extend_from_slice(&cf.values);
    FeatureVector { values, fourier_len }
}

/// Which feature block an evaluation keeps; the other is zeroed before
/// the encoder's linear layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FeatureMask {
    #[default]
    None,
    /// Keep Fourier entries, zero the Chebyshev block.
    FourierOnly,
    /// Keep Chebyshev entries, zero the Fourier block.
    ChebyshevOnly,
}

impl FeatureMask {
    pub fn apply(&self, features: &mut FeatureVector) {
        let boundary = features.fourier_len;
        match self {
            FeatureMask::None => {}
            FeatureMask::FourierOnly => features.values[boundary..].fill(0.0),
            FeatureMask::ChebyshevOnly => features.values[..boundary].fill(0.0),
        }
    }
}

/// Full encoded feature vector for one coordinate.
pub fn encode_point(
    x: &[f64],
    basis: &FrequencyBasis,
    cheb: &ChebyshevConfig,
    mask: FeatureMask,
) -> Result<FeatureVector> {
    let ff = fourier_encode(x, basis)?;
    let mut features = if cheb.order == 0 {
        ff
    } else {
        concat_features(ff, chebyshev_encode(x, cheb)?)
    };
    mask.apply(&mut features);
    Ok(features)
}

/// Feature matrix [B, F] for a batch of coordinates [B, D].
pub fn encode_batch(
    coords: &Tensor,
    basis: &FrequencyBasis,
    cheb: &ChebyshevConfig,
    mask: FeatureMask,
) -> Result<Tensor> {
    if !coords.is_matrix() {
        return Err(Error::InvalidArgument(format!(
            "coordinate batch must be a matrix, got {:?}",
            coords.shape()
        )));
    }
    let dim = coords.cols();
    let f = basis.feature_len() + cheb.feature_len(dim);
    let mut data = Vec::with_capacity(coords.rows() * f);
    for r in 0..coords.rows() {
        let features = encode_point(coords.row(r), basis, cheb, mask)?;
        data.extend_from_slice(features.values());
    }
    Tensor::matrix(coords.rows(), f, data)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rff_degenerate_scale_collapses_to_zero() {
        let basis = sample_rff(64, 2, 1e-12, 3).unwrap();
        let max = basis.omega().data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-9, "max {max}");
    }

    #[test]
    fn rff_same_seed_bitwise_identical() {
        let a = sample_rff(16, 3, 10.0, 7).unwrap();
        let b = sample_rff(16, 3, 10.0, 7).unwrap();
        assert_eq!(a.omega().data(), b.omega().data());
    }

    #[test]
    fn rff_sample_std_tracks_scale() {
        let basis = sample_rff(10_000, 1, 30.0, 123).unwrap();
        let data = basis.omega().data();
        let mean: f64 = data.iter().sum::<f64>() / data.len() as f64;
        let var: f64 = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / data.len() as f64;
        let std = var.sqrt();
        assert!((std - 30.0).abs() / 30.0 < 0.03, "std {std}");
    }

    #[test]
    fn pe_ladder_values() {
        let basis = make_pe(2, 1, 2.0).unwrap();
        let data = basis.omega().data();
        assert!((data[0] - 1.0).abs() < 1e-15);
        assert!((data[1] - 2f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn pe_base_one_gives_all_ones() {
        let basis = make_pe(4, 1, 1.0).unwrap();
        assert!(basis.omega().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn pe_two_dims_scales_per_axis() {
        let basis = make_pe(3, 2, 2.0).unwrap();
        assert_eq!(basis.num_frequencies(), 6);
        // each row is a scaled standard basis vector
        for row in 0..6 {
            let r = &basis.omega().data()[row * 2..row * 2 + 2];
            let nonzero: Vec<usize> = (0..2).filter(|&j| r[j] != 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert_eq!(nonzero[0], row / 3);
        }
        // each axis carries the same ladder
        for i in 0..3 {
            let a = basis.omega().data()[(i) * 2];
            let b = basis.omega().data()[(3 + i) * 2 + 1];
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fourier_at_zero() {
        let basis = sample_rff(5, 2, 4.0, 1).unwrap();
        let f = fourier_encode(&[0.0, 0.0], &basis).unwrap();
        assert!(f.values()[..5].iter().all(|&v| v == 0.0));
        assert!(f.values()[5..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn fourier_quarter_period() {
        let omega = Tensor::matrix(1, 1, vec![0.5]).unwrap();
        let basis = FrequencyBasis::from_matrix(omega, BasisOrigin::Pe { base: 1.0 }).unwrap();
        let f = fourier_encode(&[0.5], &basis).unwrap();
        assert!((f.values()[0] - 1.0).abs() < 1e-15);
        assert!(f.values()[1].abs() < 1e-15);
    }

    #[test]
    fn pythagorean_identity_per_frequency() {
        let basis = sample_rff(8, 2, 5.0, 9).unwrap();
        let mut rng = SplitMix64::new(10);
        for _ in 0..50 {
            let x = [rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)];
            let f = fourier_encode(&x, &basis).unwrap();
            for i in 0..8 {
                let (s, c) = (f.values()[i], f.values()[8 + i]);
                assert!((s * s + c * c - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chebyshev_closed_forms_at_half() {
        let f = chebyshev_encode(&[0.5], &ChebyshevConfig::new(4)).unwrap();
        let expected = [1.0, 0.5, -0.5, -1.0];
        for (v, e) in f.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn chebyshev_all_ones_at_boundary() {
        let f = chebyshev_encode(&[1.0], &ChebyshevConfig::new(8)).unwrap();
        assert!(f.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn chebyshev_recursion_matches_closed_form() {
        // T_j(x) = cos(j arccos x) on a 1000-point grid, j < 64
        let cfg = ChebyshevConfig::new(64);
        for gi in 0..1000 {
            let x = -1.0 + 2.0 * (gi as f64 + 0.5) / 1000.0;
            let f = chebyshev_encode(&[x], &cfg).unwrap();
            let acos = x.acos();
            for (j, &v) in f.values().iter().enumerate() {
                let reference = (j as f64 * acos).cos();
                assert!(
                    (v - reference).abs() < 1e-10,
                    "j={j} x={x} recursion={v} closed={reference}"
                );
            }
        }
    }

    #[test]
    fn chebyshev_clamps_tolerance_band_and_rejects_beyond() {
        let cfg = ChebyshevConfig::new(3);
        let ok = chebyshev_encode(&[1.0 + 5e-10], &cfg).unwrap();
        assert!((ok.values()[2] - 1.0).abs() < 1e-12);
        assert!(matches!(
            chebyshev_encode(&[1.0 + 1e-6], &cfg),
            Err(Error::ChebyshevDomain { .. })
        ));
    }

    #[test]
    fn concat_blocks_and_boundary() {
        let basis = sample_rff(96, 2, 30.0, 5).unwrap();
        let cheb = ChebyshevConfig::new(32);
        let ff = fourier_encode(&[0.1, -0.2], &basis).unwrap();
        let cf = chebyshev_encode(&[0.1, -0.2], &cheb).unwrap();
        assert_eq!(ff.len(), 192);
        assert_eq!(cf.len(), 64);
        let both = concat_features(ff, cf);
        // 192:64 is the recommended 3:1 Fourier:Chebyshev width split
        assert_eq!(both.len(), 256);
        assert_eq!(both.fourier_len(), 192);
        assert_eq!(both.chebyshev_len(), 64);
    }

    #[test]
    fn empty_chebyshev_block_is_identity_concat() {
        let basis = sample_rff(4, 1, 2.0, 2).unwrap();
        let ff = fourier_encode(&[0.3], &basis).unwrap();
        let cf = chebyshev_encode(&[0.3], &ChebyshevConfig::new(0)).unwrap();
        let ff_clone = ff.clone();
        let both = concat_features(ff, cf);
        assert_eq!(both.values(), ff_clone.values());
        assert_eq!(both.fourier_len(), ff_clone.len());
    }

    #[test]
    fn masking_zeroes_exactly_one_block() {
        let basis = sample_rff(3, 1, 2.0, 4).unwrap();
        let cheb = ChebyshevConfig::new(4);
        let full = encode_point(&[0.4], &basis, &cheb, FeatureMask::None).unwrap();
        let ff_only = encode_point(&[0.4], &basis, &cheb, FeatureMask::FourierOnly).unwrap();
        let cf_only = encode_point(&[0.4], &basis, &cheb, FeatureMask::ChebyshevOnly).unwrap();
        assert_eq!(&ff_only.values()[..6], &full.values()[..6]);
        assert!(ff_only.values()[6..].iter().all(|&v| v == 0.0));
        assert!(cf_only.values()[..6].iter().all(|&v| v == 0.0));
        assert_eq!(&cf_only.values()[6..], &full.values()[6..]);
    }

    #[test]
    fn fourier_jacobian_matches_finite_differences() {
        let basis = sample_rff(6, 2, 3.0, 8).unwrap();
        let x = [0.37, -0.61];
        let jac = fourier_encode_jacobian(&x, &basis).unwrap();
        let h = 1e-6;
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let fp = fourier_encode(&xp, &basis).unwrap();
            let fm = fourier_encode(&xm, &basis).unwrap();
            for r in 0..12 {
                let numeric = (fp.values()[r] - fm.values()[r]) / (2.0 * h);
                let analytic = jac.data()[r * 2 + d];
                let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(rel < 1e-6, "row {r} dim {d}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn encodings_are_pure() {
        let basis = sample_rff(5, 2, 7.0, 11).unwrap();
        let cheb = ChebyshevConfig::new(6);
        let a = encode_point(&[0.2, 0.9], &basis, &cheb, FeatureMask::None).unwrap();
        let b = encode_point(&[0.2, 0.9], &basis, &cheb, FeatureMask::None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_args_rejected() {
        assert!(sample_rff(0, 2, 1.0, 0).is_err());
        assert!(sample_rff(4, 2, 0.0, 0).is_err());
        assert!(sample_rff(4, 2, -1.0, 0).is_err());
        assert!(make_pe(4, 0, 2.0).is_err());
        assert!(make_pe(4, 1, 0.0).is_err());
        let basis = sample_rff(4, 2, 1.0, 0).unwrap();
        assert!(fourier_encode(&[0.0], &basis).is_err());
    }
}
