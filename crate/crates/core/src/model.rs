//! Encoder models: the parallel-linear Hadamard encoder over Fourier /
//! Fourier-Chebyshev features with a ReLU MLP backbone, and the plain
//! feature-to-MLP baseline it is compared against.

use std::sync::Arc;

use crate::encodings::{
    encode_batch, encode_point, make_pe, sample_rff, ChebyshevConfig, FeatureMask, FrequencyBasis,
};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{stream_rng, RngStream, SplitMix64};
use crate::tensor::Tensor;

/// One affine layer: weight is [out, in] row-major, bias is [out].
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn param_count(&self) -> usize {
        self.weight.numel() + self.bias.numel()
    }
}

/// N parallel affine layers sharing one input; their outputs are fused by
/// elementwise product.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelLinearStack {
    pub layers: Vec<DenseLayer>,
}

impl ParallelLinearStack {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn width(&self) -> usize {
        self.layers[0].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }
}

/// ReLU hidden layers plus a linear readout. Zero hidden layers means the
/// readout applies directly to its input.
#[derive(Clone, Debug, PartialEq)]
pub struct BackboneMlp {
    pub hidden: Vec<DenseLayer>,
    pub output: DenseLayer,
}

impl BackboneMlp {
    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output.out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.hidden.iter().map(DenseLayer::param_count).sum::<usize>()
            + self.output.param_count()
    }
}

/// Encoder + parallel stack + backbone; the trainable object.
#[derive(Clone, Debug, PartialEq)]
pub struct CafeModel {
    pub basis: FrequencyBasis,
    pub cheb: ChebyshevConfig,
    pub stack: ParallelLinearStack,
    pub mlp: BackboneMlp,
    pub input_dim: usize,
}

/// Baseline: encoded features feed the MLP directly (no parallel stack).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMlp {
    pub basis: FrequencyBasis,
    pub cheb: ChebyshevConfig,
    pub mlp: BackboneMlp,
    pub input_dim: usize,
}

/// Either architecture behind one training/evaluation interface.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Cafe(CafeModel),
    Direct(FeatureMlp),
}

/// Frequency sampling choice for a model spec.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FourierSpec {
    Rff { m: usize, scale: f64 },
    Pe { m: usize, base: f64 },
}

/// Widths and counts needed to initialize a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub fourier: FourierSpec,
    pub cheb_order: usize,
    /// Parallel layer count N; 0 builds the direct feature-MLP baseline.
    pub parallel_layers: usize,
    /// Encoder output / MLP hidden width.
    pub width: usize,
    pub mlp_depth: usize,
    pub output_dim: usize,
}

impl ModelSpec {
    pub fn feature_dim(&self) -> usize {
        let m = match self.fourier {
            FourierSpec::Rff { m, .. } => m,
            // PE realizes one ladder per axis.
            FourierSpec::Pe { m, .. } => m * self.input_dim,
        };
        2 * m + self.input_dim * self.cheb_order
    }
}

fn sample_layer(rng: &mut SplitMix64, out_dim: usize, in_dim: usize, w_bound: f64, bias_range: Option<(f64, f64)>) -> DenseLayer {
    let weight = Tensor::matrix(
        out_dim,
        in_dim,
        (0..out_dim * in_dim)
            .map(|_| rng.next_range(-w_bound, w_bound))
            .collect(),
    )
    .expect("layer shape");
    let bias = match bias_range {
        Some((lo, hi)) => {
            Tensor::new(vec![out_dim], (0..out_dim).map(|_| rng.next_range(lo, hi)).collect())
                .expect("bias shape")
        }
        None => Tensor::zeros(vec![out_dim]),
    };
    DenseLayer { weight, bias }
}

fn build_basis(spec: &ModelSpec, seed: u64) -> Result<FrequencyBasis> {
    let mut basis_rng = stream_rng(seed, RngStream::Basis);
    let basis_seed = basis_rng.next_u64();
    match spec.fourier {
        FourierSpec::Rff { m, scale } => sample_rff(m, spec.input_dim, scale, basis_seed),
        FourierSpec::Pe { m, base } => make_pe(m, spec.input_dim, base),
    }
}

fn build_mlp(rng: &mut SplitMix64, input_width: usize, width: usize, depth: usize, output_dim: usize) -> BackboneMlp {
    let mut hidden = Vec::with_capacity(depth);
    let mut in_dim = input_width;
    for _ in 0..depth {
        hidden.push(sample_layer(rng, width, in_dim, 1.0 / (in_dim as f64).sqrt(), None));
        in_dim = width;
    }
    let output = sample_layer(rng, output_dim, in_dim, 1.0 / (in_dim as f64).sqrt(), None);
    BackboneMlp { hidden, output }
}

/// Deterministic initialization from a spec and seed.
///
/// Every layer, parallel or backbone, draws weights and biases from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) except backbone biases, which
/// start at zero. Zero-mean parallel-layer biases keep the N-fold
/// product features diverse instead of pinning them near a shared
/// constant; first-order frequency content is recovered quickly once
/// the biases move. Sampling order is stack layers (weight then bias),
/// then MLP hidden layers, then the readout.
pub fn init_model(spec: &ModelSpec, seed: u64) -> Result<Model> {
    if spec.width == 0 || spec.output_dim == 0 || spec.input_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "model spec needs width, input_dim and output_dim >= 1, got {spec:?}"
        )));
    }
    let basis = build_basis(spec, seed)?;
    let cheb = ChebyshevConfig::new(spec.cheb_order);
    let feature_dim = basis.feature_len() + cheb.feature_len(spec.input_dim);
    let mut rng = stream_rng(seed, RngStream::Init);
    if spec.parallel_layers == 0 {
        let mlp = build_mlp(&mut rng, feature_dim, spec.width, spec.mlp_depth, spec.output_dim);
        return Ok(Model::Direct(FeatureMlp {
            basis,
            cheb,
            mlp,
            input_dim: spec.input_dim,
        }));
    }
    let w_bound = 1.0 / (feature_dim as f64).sqrt();
    let layers = (0..spec.parallel_layers)
        .map(|_| sample_layer(&mut rng, spec.width, feature_dim, w_bound, Some((-w_bound, w_bound))))
        .collect();
    let mlp = build_mlp(&mut rng, spec.width, spec.width, spec.mlp_depth, spec.output_dim);
    Ok(Model::Cafe(CafeModel {
        basis,
        cheb,
        stack: ParallelLinearStack { layers },
        mlp,
        input_dim: spec.input_dim,
    }))
}

/// Like [`init_model`] but requires a parallel stack.
pub fn init_cafe_model(spec: &ModelSpec, seed: u64) -> Result<CafeModel> {
    if spec.parallel_layers == 0 {
        return Err(Error::InvalidArgument(
            "cafe model needs at least one parallel layer".into(),
        ));
    }
    match init_model(spec, seed)? {
        Model::Cafe(m) => Ok(m),
        Model::Direct(_) => unreachable!("parallel_layers >= 1"),
    }
}

/// Output and parameter handles of one forward construction.
pub struct ForwardPass {
    pub output: NodeId,
    /// Encoder output node (None for the direct baseline).
    pub psi: Option<NodeId>,
    /// Parameter nodes in checkpoint order.
    pub params: Vec<NodeId>,
}

fn mlp_on_graph(
    g: &mut Graph,
    mut z: NodeId,
    mlp: &BackboneMlp,
    params: &mut Vec<NodeId>,
) -> Result<NodeId> {
    for layer in &mlp.hidden {
        let w = g.param(layer.weight.clone());
        let b = g.param(layer.bias.clone());
        params.push(w);
        params.push(b);
        let pre = g.linear(z, w, b)?;
        z = g.relu(pre);
    }
    let w = g.param(mlp.output.weight.clone());
    let b = g.param(mlp.output.bias.clone());
    params.push(w);
    params.push(b);
    g.linear(z, w, b)
}

impl CafeModel {
    pub fn feature_dim(&self) -> usize {
        self.basis.feature_len() + self.cheb.feature_len(self.input_dim)
    }

    pub fn width(&self) -> usize {
        self.stack.width()
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    /// Exact parameter count: N (F Dh + Dh) plus the backbone's layers.
    pub fn count_params(&self) -> usize {
        self.stack.param_count() + self.mlp.param_count()
    }

    /// Builds the differentiable pipeline from a feature-matrix node:
    /// psi = prod_i (features W_i^T + b_i), then the ReLU backbone.
    pub fn forward_on_graph(&self, g: &mut Graph, features: NodeId) -> Result<ForwardPass> {
        let mut params = Vec::with_capacity(2 * self.stack.num_layers() + 2 * (self.mlp.depth() + 1));
        let mut psi: Option<NodeId> = None;
        for layer in &self.stack.layers {
            let w = g.param(layer.weight.clone());
            let b = g.param(layer.bias.clone());
            params.push(w);
            params.push(b);
            let h = g.linear(features, w, b)?;
            psi = Some(match psi {
                None => h,
                Some(acc) => g.hadamard(acc, h)?,
            });
        }
        let psi = psi.expect("stack is non-empty");
        let output = mlp_on_graph(g, psi, &self.mlp, &mut params)?;
        Ok(ForwardPass {
            output,
            psi: Some(psi),
            params,
        })
    }

    /// Encoder output for one coordinate: elementwise product of the N
    /// affine maps over the (optionally masked) feature vector.
    pub fn encode(&self, x: &[f64], mask: FeatureMask) -> Result<Vec<f64>> {
        let features = encode_point(x, &self.basis, &self.cheb, mask)?;
        let f = features.values();
        let width = self.width();
        let mut psi = vec![1.0; width];
        for layer in &self.stack.layers {
            for (j, p) in psi.iter_mut().enumerate() {
                let row = layer.weight.row(j);
                let h: f64 = row.iter().zip(f).map(|(w, v)| w * v).sum::<f64>()
                    + layer.bias.data()[j];
                *p *= h;
            }
        }
        Ok(psi)
    }

    /// Product-to-sum coefficients for a two-layer stack: C_a..C_d couple
    /// the i-th and m-th sine/cosine features at output coordinate j.
    pub fn pairwise_expansion_coeffs(
        &self,
        out_idx: usize,
        freq_i: usize,
        freq_m: usize,
    ) -> Result<PairwiseCoeffs> {
        if self.stack.num_layers() != 2 {
            return Err(Error::InvalidArgument(format!(
                "pairwise expansion requires exactly 2 parallel layers, got {}",
                self.stack.num_layers()
            )));
        }
        let m = self.basis.num_frequencies();
        if out_idx >= self.width() || freq_i >= m || freq_m >= m {
            return Err(Error::InvalidArgument(format!(
                "index out of range: out {out_idx} (width {}), freqs {freq_i},{freq_m} (M {m})",
                self.width()
            )));
        }
        let w1 = self.stack.layers[0].weight.row(out_idx);
        let w2 = self.stack.layers[1].weight.row(out_idx);
        // columns 0..M are sine features, M..2M cosine features
        Ok(PairwiseCoeffs {
            c_a: w1[freq_i] * w2[freq_m],
            c_b: w1[m + freq_i] * w2[m + freq_m],
            c_c: w1[freq_i] * w2[m + freq_m],
            c_d: w1[m + freq_i] * w2[freq_m],
        })
    }
}

/// The four weight products governing one (i, m) frequency pair:
/// C_a = w1_s w2_s, C_b = w1_c w2_c, C_c = w1_s w2_c, C_d = w1_c w2_s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseCoeffs {
    pub c_a: f64,
    pub c_b: f64,
    pub c_c: f64,
    pub c_d: f64,
}

impl PairwiseCoeffs {
    /// Product-to-sum reconstruction:
    /// 1/2 [ (C_a+C_b) cos(ti-tm) + (C_b-C_a) cos(ti+tm)
    ///     + (C_c-C_d) sin(ti-tm) + (C_c+C_d) sin(ti+tm) ].
    pub fn reconstruction(&self, theta_i: f64, theta_m: f64) -> f64 {
        let diff = theta_i - theta_m;
        let sum = theta_i + theta_m;
        0.5 * ((self.c_a + self.c_b) * diff.cos()
            + (self.c_b - self.c_a) * sum.cos()
            + (self.c_c - self.c_d) * diff.sin()
            + (self.c_c + self.c_d) * sum.sin())
    }

    /// The raw product term the reconstruction must equal:
    /// (w1_s sin ti + w1_c cos ti)(w2_s sin tm + w2_c cos tm).
    pub fn direct_product(&self, theta_i: f64, theta_m: f64) -> f64 {
        self.c_a * theta_i.sin() * theta_m.sin()
            + self.c_c * theta_i.sin() * theta_m.cos()
            + self.c_d * theta_i.cos() * theta_m.sin()
            + self.c_b * theta_i.cos() * theta_m.cos()
    }
}

impl FeatureMlp {
    pub fn feature_dim(&self) -> usize {
        self.basis.feature_len() + self.cheb.feature_len(self.input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn count_params(&self) -> usize {
        self.mlp.param_count()
    }

    pub fn forward_on_graph(&self, g: &mut Graph, features: NodeId) -> Result<ForwardPass> {
        let mut params = Vec::with_capacity(2 * (self.mlp.depth() + 1));
        let output = mlp_on_graph(g, features, &self.mlp, &mut params)?;
        Ok(ForwardPass {
            output,
            psi: None,
            params,
        })
    }
}

impl Model {
    pub fn basis(&self) -> &FrequencyBasis {
        match self {
            Model::Cafe(m) => &m.basis,
            Model::Direct(m) => &m.basis,
        }
    }

    pub fn cheb(&self) -> &ChebyshevConfig {
        match self {
            Model::Cafe(m) => &m.cheb,
            Model::Direct(m) => &m.cheb,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Cafe(m) => m.input_dim,
            Model::Direct(m) => m.input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Model::Cafe(m) => m.output_dim(),
            Model::Direct(m) => m.output_dim(),
        }
    }

    pub fn count_params(&self) -> usize {
        match self {
            Model::Cafe(m) => m.count_params(),
            Model::Direct(m) => m.count_params(),
        }
    }

    pub fn parallel_layers(&self) -> usize {
        match self {
            Model::Cafe(m) => m.stack.num_layers(),
            Model::Direct(_) => 0,
        }
    }

    pub fn mlp(&self) -> &BackboneMlp {
        match self {
            Model::Cafe(m) => &m.mlp,
            Model::Direct(m) => &m.mlp,
        }
    }

    /// Parameter tensors in checkpoint order: stack W_1, b_1, ..., W_N,
    /// b_N, then MLP hidden layers, then the readout.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        if let Model::Cafe(m) = self {
            for l in &m.stack.layers {
                out.push(&l.weight);
                out.push(&l.bias);
            }
        }
        let mlp = self.mlp();
        for l in &mlp.hidden {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out.push(&mlp.output.weight);
        out.push(&mlp.output.bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        let mlp = match self {
            Model::Cafe(m) => {
                for l in &mut m.stack.layers {
                    out.push(&mut l.weight);
                    out.push(&mut l.bias);
                }
                &mut m.mlp
            }
            Model::Direct(m) => &mut m.mlp,
        };
        for l in &mut mlp.hidden {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out.push(&mut mlp.output.weight);
        out.push(&mut mlp.output.bias);
        out
    }

    /// Feature matrix for a batch of coordinates.
    pub fn encode_batch(&self, coords: &Tensor, mask: FeatureMask) -> Result<Tensor> {
        encode_batch(coords, self.basis(), self.cheb(), mask)
    }

    pub fn forward_on_graph(&self, g: &mut Graph, features: NodeId) -> Result<ForwardPass> {
        match self {
            Model::Cafe(m) => m.forward_on_graph(g, features),
            Model::Direct(m) => m.forward_on_graph(g, features),
        }
    }

    /// Predictions [B, out] for a coordinate batch; masked features are
    /// zeroed before the encoder's linear layers.
    pub fn forward_batch(&self, coords: &Tensor, mask: FeatureMask) -> Result<Tensor> {
        let features = self.encode_batch(coords, mask)?;
        let mut g = Graph::new();
        let f = g.constant(Arc::new(features));
        let pass = self.forward_on_graph(&mut g, f)?;
        Ok(g.value(pass.output).clone())
    }
}
