//! Exact spectral machinery: admissible-frequency enumeration, Chebyshev
//! order-set recursions, symbolic product-to-sum algebra, DFT validation,
//! and the empirical neural tangent kernel.

mod cheb;
mod dft;
mod freq;
mod ntk;
mod trig;

pub use cheb::{
    cheb_power_orders, symbolic_cheb_multiply, ChebOrderSet, ChebPowerOrders, SparseChebPoly,
    COEFF_PRUNE_EPS,
};
pub use dft::{empirical_spectrum_dft, SpectrumScan, ACTIVE_BIN_THRESHOLD};
pub use freq::{
    base_1d, enumerate_cafe_frequencies, enumerate_signed_form, enumerate_union_form, FreqSet,
    IntFreqVector, DEFAULT_ENUMERATION_BUDGET,
};
pub use ntk::{compute_ntk, ntk_from_jacobians, symmetric_eigenvalues, NtkBudget, NtkMatrix};
pub use trig::{
    expand_cafe_symbolically, integer_base, symbolic_trig_multiply, CafeExpansion, SparseTrigPoly,
    TrigCoeff,
};
