//! Content-aware frequency encodings for implicit neural representations.
//!
//! The crate bundles four layers:
//!
//! * a minimal dense-tensor engine with tape-style reverse-mode autodiff
//!   and Adam ([`tensor`], [`graph`], [`adam`], [`gradcheck`]);
//! * coordinate encodings: random Fourier features, positional encoding,
//!   Chebyshev features ([`encodings`]);
//! * the parallel-linear Hadamard encoder models ([`model`]);
//! * exact spectral oracles that enumerate and verify the frequency and
//!   order sets those encoders can synthesize ([`spectrum`]), and a small
//!   training harness with metrics, checkpoints and reports ([`harness`]).

pub mod adam;
pub mod encodings;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod harness;
pub mod model;
pub mod rng;
pub mod spectrum;
pub mod tensor;

pub use adam::{AdamHyper, AdamState};
pub use encodings::{
    chebyshev_encode, concat_features, encode_batch, encode_point, fourier_encode,
    fourier_encode_jacobian, make_pe, sample_rff, BasisOrigin, ChebyshevConfig, FeatureMask,
    FeatureVector, FrequencyBasis,
};
pub use error::{Error, Result};
pub use gradcheck::{audit_model_gradients, finite_diff_grad, max_rel_error, REL_ERROR_FLOOR};
pub use graph::{Gradients, Graph, NodeId, UnaryKind};
pub use model::{
    init_cafe_model, init_model, BackboneMlp, CafeModel, DenseLayer, FeatureMlp, ForwardPass,
    FourierSpec, Model, ModelSpec, PairwiseCoeffs, ParallelLinearStack,
};
pub use rng::{stream_rng, RngStream, SplitMix64};
pub use tensor::{matmul, matmul_nt, matmul_tn, transpose, Tensor};
