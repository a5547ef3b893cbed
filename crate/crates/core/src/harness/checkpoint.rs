//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!   magic "CAFE", version byte 0x01,
//!   u32 D, M, J, N, D_h, L_mlp, D_out,
//!   u64 seed, f64 scale,
//!   frequency matrix (M x D f64, row-major),
//!   then each parameter tensor as u32 rank, u32 dims..., f64 data,
//!   ordered stack W_1, b_1, ..., W_N, b_N, then MLP layers in order.
//!
//! M is the realized frequency-row count; N = 0 marks a model without a
//! parallel stack. The origin kind of the basis is not encoded: loaders
//! see the stored scale and seed with the frequency matrix taken
//! verbatim.

use std::path::Path;

use super::report::write_atomic;
use crate::encodings::{BasisOrigin, ChebyshevConfig, FrequencyBasis};
use crate::error::{Error, Result};
use crate::model::{BackboneMlp, CafeModel, DenseLayer, FeatureMlp, Model, ParallelLinearStack};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"CAFE";
const VERSION: u8 = 0x01;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, t: &Tensor) {
    put_u32(out, t.shape().len() as u32);
    for &d in t.shape() {
        put_u32(out, d as u32);
    }
    for &v in t.data() {
        put_f64(out, v);
    }
}

/// Serializes a model (plus the run seed) into checkpoint bytes.
pub fn checkpoint_bytes(model: &Model, seed: u64) -> Vec<u8> {
    let basis = model.basis();
    let (scale, stored_seed) = match basis.origin() {
        BasisOrigin::Rff { scale, .. } => (scale, seed),
        BasisOrigin::Pe { base } => (base, seed),
    };
    let mlp = model.mlp();
    let width = match model {
        Model::Cafe(m) => m.width(),
        Model::Direct(_) => mlp.hidden.first().map_or(0, DenseLayer::out_dim),
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    put_u32(&mut out, model.input_dim() as u32);
    put_u32(&mut out, basis.num_frequencies() as u32);
    put_u32(&mut out, model.cheb().order as u32);
    put_u32(&mut out, model.parallel_layers() as u32);
    put_u32(&mut out, width as u32);
    put_u32(&mut out, mlp.depth() as u32);
    put_u32(&mut out, model.output_dim() as u32);
    out.extend_from_slice(&stored_seed.to_le_bytes());
    put_f64(&mut out, scale);
    for &v in basis.omega().data() {
        put_f64(&mut out, v);
    }
    for t in model.params() {
        put_tensor(&mut out, t);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::CheckpointFormat(format!(
                "truncated: wanted {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn tensor(&mut self) -> Result<Tensor> {
        let rank = self.u32()? as usize;
        if rank > 4 {
            return Err(Error::CheckpointFormat(format!("implausible tensor rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u32()? as usize);
        }
        let numel: usize = shape.iter().product();
        Tensor::new(shape, self.f64s(numel)?)
            .map_err(|e| Error::CheckpointFormat(e.to_string()))
    }
}

fn expect_layer(r: &mut Reader, out_dim: usize, in_dim: usize, what: &str) -> Result<DenseLayer> {
    let weight = r.tensor()?;
    let bias = r.tensor()?;
    if weight.shape() != [out_dim, in_dim] || bias.shape() != [out_dim] {
        return Err(Error::CheckpointFormat(format!(
            "{what}: expected weight [{out_dim}, {in_dim}] and bias [{out_dim}], got {:?} and {:?}",
            weight.shape(),
            bias.shape()
        )));
    }
    Ok(DenseLayer { weight, bias })
}

/// Reconstructs a model (and the stored seed) from checkpoint bytes.
pub fn parse_checkpoint(bytes: &[u8]) -> Result<(Model, u64)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::CheckpointFormat("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: VERSION,
        });
    }
    let input_dim = r.u32()? as usize;
    let m = r.u32()? as usize;
    let j = r.u32()? as usize;
    let n = r.u32()? as usize;
    let width = r.u32()? as usize;
    let depth = r.u32()? as usize;
    let out_dim = r.u32()? as usize;
    let seed = r.u64()?;
    let scale = r.f64()?;
    let omega = Tensor::matrix(m, input_dim, r.f64s(m * input_dim)?)
        .map_err(|e| Error::CheckpointFormat(e.to_string()))?;
    let basis = FrequencyBasis::from_matrix(omega, BasisOrigin::Rff { scale, seed })
        .map_err(|e| Error::CheckpointFormat(e.to_string()))?;
    let cheb = ChebyshevConfig::new(j);
    let feature_dim = basis.feature_len() + cheb.feature_len(input_dim);

    let model = if n > 0 {
        let mut layers = Vec::with_capacity(n);
        for i in 0..n {
            layers.push(expect_layer(&mut r, width, feature_dim, &format!("stack layer {i}"))?);
        }
        let mut hidden = Vec::with_capacity(depth);
        let mut in_dim = width;
        for i in 0..depth {
            hidden.push(expect_layer(&mut r, width, in_dim, &format!("hidden layer {i}"))?);
            in_dim = width;
        }
        let output = expect_layer(&mut r, out_dim, in_dim, "output layer")?;
        Model::Cafe(CafeModel {
            basis,
            cheb,
            stack: ParallelLinearStack { layers },
            mlp: BackboneMlp { hidden, output },
            input_dim,
        })
    } else {
        let mut hidden = Vec::with_capacity(depth);
        let mut in_dim = feature_dim;
        for i in 0..depth {
            hidden.push(expect_layer(&mut r, width, in_dim, &format!("hidden layer {i}"))?);
            in_dim = width;
        }
        let output = expect_layer(&mut r, out_dim, in_dim, "output layer")?;
        Model::Direct(FeatureMlp {
            basis,
            cheb,
            mlp: BackboneMlp { hidden, output },
            input_dim,
        })
    };
    if r.pos != bytes.len() {
        return Err(Error::CheckpointFormat(format!(
            "{} trailing bytes after parameters",
            bytes.len() - r.pos
        )));
    }
    Ok((model, seed))
}

pub fn checkpoint_save(model: &Model, seed: u64, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &checkpoint_bytes(model, seed))
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<(Model, u64)> {
    parse_checkpoint(&std::fs::read(path)?)
}
