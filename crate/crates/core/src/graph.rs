//! Tape-style compute graph with reverse-mode differentiation.
//!
//! A [`Graph`] is rebuilt for every forward pass: nodes are appended in
//! topological order, each caching its forward value. [`Graph::backward`]
//! walks the tape once in reverse, accumulating adjoints in index order,
//! so gradients are deterministic and repeated backward calls on the same
//! graph return identical results.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{matmul, matmul_nt, matmul_tn, recycle_buffer, take_buffer, transpose, Tensor};

/// Handle to a node on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(pub usize);

/// Elementwise nonlinearities available as graph ops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryKind {
    Sin,
    Cos,
    Relu,
}

#[derive(Clone, Debug)]
enum Op {
    /// Input node; `trainable` marks parameters whose gradients are kept.
    Leaf { trainable: bool },
    Matmul(NodeId, NodeId),
    /// x * w^T + b with b broadcast over rows; the affine layer primitive.
    Linear {
        x: NodeId,
        w: NodeId,
        b: NodeId,
    },
    Transpose(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    Scale(NodeId, f64),
    Unary(UnaryKind, NodeId),
    Sum(NodeId),
    Mse(NodeId, NodeId),
}

struct Node {
    op: Op,
    value: Arc<Tensor>,
    needs_grad: bool,
}

/// Gradients per node, indexed by [`NodeId`]. Only leaves marked trainable
/// retain entries after a backward pass.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.get_mut(id.0).and_then(|g| g.take())
    }
}

impl Drop for Gradients {
    fn drop(&mut self) {
        for g in self.grads.drain(..).flatten() {
            recycle_buffer(g.into_data());
        }
    }
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf; its gradient survives backward.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf { trainable: true }, Arc::new(value), true)
    }

    /// Non-trainable leaf. Accepts shared tensors so large constants
    /// (feature matrices, targets) are not copied per pass.
    pub fn constant(&mut self, value: impl Into<Arc<Tensor>>) -> NodeId {
        self.push(Op::Leaf { trainable: false }, value.into(), false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Arc<Tensor>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push_op(&mut self, op: Op, value: Tensor, inputs: &[NodeId]) -> NodeId {
        let needs = inputs.iter().any(|id| self.nodes[id.0].needs_grad);
        self.push(op, Arc::new(value), needs)
    }

    fn same_shape(&self, a: NodeId, b: NodeId, op: &'static str) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::ShapeMismatch {
                op,
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = matmul(self.value(a), self.value(b))?;
        Ok(self.push_op(Op::Matmul(a, b), value, &[a, b]))
    }

    /// Affine map y = x w^T + b for x: [B,in], w: [out,in], b: [out].
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if !xv.is_matrix() || !wv.is_matrix() || xv.cols() != wv.cols() {
            return Err(Error::ShapeMismatch {
                op: "linear",
                lhs: xv.shape().to_vec(),
                rhs: wv.shape().to_vec(),
            });
        }
        if bv.numel() != wv.rows() {
            return Err(Error::ShapeMismatch {
                op: "linear bias",
                lhs: bv.shape().to_vec(),
                rhs: vec![wv.rows()],
            });
        }
        let mut out = matmul_nt(xv, wv)?;
        let cols = out.cols();
        let bias = bv.data().to_vec();
        for row in out.data_mut().chunks_exact_mut(cols) {
            for (o, &bb) in row.iter_mut().zip(bias.iter()) {
                *o += bb;
            }
        }
        Ok(self.push_op(Op::Linear { x, w, b }, out, &[x, w, b]))
    }

    pub fn transpose(&mut self, x: NodeId) -> Result<NodeId> {
        if !self.value(x).is_matrix() {
            return Err(Error::ShapeMismatch {
                op: "transpose",
                lhs: self.value(x).shape().to_vec(),
                rhs: vec![],
            });
        }
        let value = transpose(self.value(x));
        Ok(self.push_op(Op::Transpose(x), value, &[x]))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "add")?;
        let value = zip_map(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push_op(Op::Add(a, b), value, &[a, b]))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "sub")?;
        let value = zip_map(self.value(a), self.value(b), |x, y| x - y);
        Ok(self.push_op(Op::Sub(a, b), value, &[a, b]))
    }

    /// Elementwise product; adjoint of each side is grad (.) other.
    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "hadamard")?;
        let value = zip_map(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push_op(Op::Hadamard(a, b), value, &[a, b]))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let value = map_pooled(self.value(x), |v| v * factor);
        self.push_op(Op::Scale(x, factor), value, &[x])
    }

    pub fn unary(&mut self, kind: UnaryKind, x: NodeId) -> NodeId {
        let value = match kind {
            UnaryKind::Sin => map_pooled(self.value(x), f64::sin),
            UnaryKind::Cos => map_pooled(self.value(x), f64::cos),
            UnaryKind::Relu => map_pooled(self.value(x), |v| v.max(0.0)),
        };
        self.push_op(Op::Unary(kind, x), value, &[x])
    }

    pub fn sin(&mut self, x: NodeId) -> NodeId {
        self.unary(UnaryKind::Sin, x)
    }

    pub fn cos(&mut self, x: NodeId) -> NodeId {
        self.unary(UnaryKind::Cos, x)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.unary(UnaryKind::Relu, x)
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let total: f64 = self.value(x).data().iter().sum();
        self.push_op(Op::Sum(x), Tensor::scalar(total), &[x])
    }

    /// Mean squared error between same-shaped tensors, as a scalar node.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        self.same_shape(pred, target, "mse_loss")?;
        let n = self.value(pred).numel() as f64;
        let total: f64 = self
            .value(pred)
            .data()
            .iter()
            .zip(self.value(target).data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        Ok(self.push_op(Op::Mse(pred, target), Tensor::scalar(total / n), &[pred, target]))
    }

    /// Reverse-mode gradients of a scalar root with respect to every
    /// trainable leaf. Pure: the graph is not mutated.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        let root_val = self.value(root);
        if !root_val.is_scalar() {
            return Err(Error::NonScalarRoot {
                shape: root_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor::ones(root_val.shape().to_vec()));

        for id in (0..=root.0).rev() {
            if !self.nodes[id].needs_grad {
                continue;
            }
            let Some(grad) = grads[id].take() else {
                continue;
            };
            match self.nodes[id].op {
                Op::Leaf { .. } => {}
                Op::Matmul(a, b) => {
                    if self.needs(a) {
                        let da = matmul_nt(&grad, self.value(b))?;
                        accumulate(&mut grads[a.0], da);
                    }
                    if self.needs(b) {
                        let db = matmul_tn(self.value(a), &grad)?;
                        accumulate(&mut grads[b.0], db);
                    }
                }
                Op::Linear { x, w, b } => {
                    if self.needs(x) {
                        let dx = matmul(&grad, self.value(w))?;
                        accumulate(&mut grads[x.0], dx);
                    }
                    if self.needs(w) {
                        let dw = matmul_tn(&grad, self.value(x))?;
                        accumulate(&mut grads[w.0], dw);
                    }
                    if self.needs(b) {
                        let cols = grad.cols();
                        let mut db = vec![0.0; cols];
                        for row in grad.data().chunks_exact(cols) {
                            for (d, &g) in db.iter_mut().zip(row) {
                                *d += g;
                            }
                        }
                        accumulate(
                            &mut grads[b.0],
                            Tensor::new(self.value(b).shape().to_vec(), db)?,
                        );
                    }
                }
                Op::Transpose(x) => {
                    if self.needs(x) {
                        accumulate(&mut grads[x.0], transpose(&grad));
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(a) {
                        accumulate(&mut grads[a.0], grad.clone());
                    }
                    if self.needs(b) {
                        accumulate(&mut grads[b.0], grad.clone());
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(a) {
                        accumulate(&mut grads[a.0], grad.clone());
                    }
                    if self.needs(b) {
                        accumulate(&mut grads[b.0], map_pooled(&grad, |g| -g));
                    }
                }
                Op::Hadamard(a, b) => {
                    if self.needs(a) {
                        accumulate(&mut grads[a.0], zip_map(&grad, self.value(b), |x, y| x * y));
                    }
                    if self.needs(b) {
                        accumulate(&mut grads[b.0], zip_map(&grad, self.value(a), |x, y| x * y));
                    }
                }
                Op::Scale(x, factor) => {
                    if self.needs(x) {
                        accumulate(&mut grads[x.0], map_pooled(&grad, |g| g * factor));
                    }
                }
                Op::Unary(kind, x) => {
                    if self.needs(x) {
                        let xv = self.value(x);
                        let dx = match kind {
                            UnaryKind::Sin => zip_map(&grad, xv, |g, v| g * v.cos()),
                            UnaryKind::Cos => zip_map(&grad, xv, |g, v| -g * v.sin()),
                            // Subgradient at exactly 0 is 0.
                            UnaryKind::Relu => {
                                zip_map(&grad, xv, |g, v| if v > 0.0 { g } else { 0.0 })
                            }
                        };
                        accumulate(&mut grads[x.0], dx);
                    }
                }
                Op::Sum(x) => {
                    if self.needs(x) {
                        let g = grad.item();
                        accumulate(&mut grads[x.0], map_pooled(self.value(x), |_| g));
                    }
                }
                Op::Mse(pred, target) => {
                    let n = self.value(pred).numel() as f64;
                    let g = grad.item();
                    if self.needs(pred) {
                        let dp = zip_map(self.value(pred), self.value(target), |p, t| {
                            g * 2.0 * (p - t) / n
                        });
                        accumulate(&mut grads[pred.0], dp);
                    }
                    if self.needs(target) {
                        let dt = zip_map(self.value(pred), self.value(target), |p, t| {
                            -g * 2.0 * (p - t) / n
                        });
                        accumulate(&mut grads[target.0], dt);
                    }
                }
            }
            // only trainable leaves keep their gradient
            if matches!(self.nodes[id].op, Op::Leaf { trainable: true }) {
                grads[id] = Some(grad);
            } else {
                recycle_buffer(grad.into_data());
            }
        }
        Ok(Gradients { grads })
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }
}

impl Drop for Graph {
    fn drop(&mut self) {
        for node in self.nodes.drain(..) {
            if let Ok(t) = Arc::try_unwrap(node.value) {
                recycle_buffer(t.into_data());
            }
        }
    }
}

fn accumulate(slot: &mut Option<Tensor>, contribution: Tensor) {
    match slot {
        Some(existing) => {
            existing.add_assign(&contribution);
            recycle_buffer(contribution.into_data());
        }
        None => *slot = Some(contribution),
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    debug_assert_eq!(a.shape(), b.shape());
    let mut buf = take_buffer(a.numel(), false);
    for (o, (&x, &y)) in buf.iter_mut().zip(a.data().iter().zip(b.data())) {
        *o = f(x, y);
    }
    Tensor::new(a.shape().to_vec(), buf).expect("zip_map preserves shape")
}

fn map_pooled(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let mut buf = take_buffer(a.numel(), false);
    for (o, &x) in buf.iter_mut().zip(a.data().iter()) {
        *o = f(x);
    }
    Tensor::new(a.shape().to_vec(), buf).expect("map preserves shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        // f(w) = w^2 at w = 3 -> grad 6
        let mut g = Graph::new();
        let w = g.param(Tensor::scalar(3.0));
        let y = g.hadamard(w, w).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(w).unwrap().item(), 6.0);
    }

    #[test]
    fn sin_gradient_at_zero() {
        let mut g = Graph::new();
        let w = g.param(Tensor::scalar(0.0));
        let y = g.sin(w);
        assert_eq!(g.value(y).item(), 0.0);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(w).unwrap().item(), 1.0);
    }

    #[test]
    fn cos_gradient_at_half_pi() {
        let mut g = Graph::new();
        let w = g.param(Tensor::scalar(std::f64::consts::FRAC_PI_2));
        let y = g.cos(w);
        let grads = g.backward(y).unwrap();
        assert!((grads.get(w).unwrap().item() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn relu_values_and_subgradients() {
        let mut g = Graph::new();
        let x = g.param(Tensor::new(vec![3], vec![-2.0, 0.0, 3.0]).unwrap());
        let y = g.relu(x);
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 3.0]);
        let s = g.sum(y);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn hadamard_arithmetic_and_identity() {
        let mut g = Graph::new();
        let a = g.param(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let b = g.param(Tensor::new(vec![2], vec![3.0, 4.0]).unwrap());
        let p = g.hadamard(a, b).unwrap();
        assert_eq!(g.value(p).data(), &[3.0, 8.0]);
        let ones = g.constant(Tensor::ones(vec![2]));
        let q = g.hadamard(a, ones).unwrap();
        assert_eq!(g.value(q).data(), g.value(a).data());
    }

    #[test]
    fn hadamard_self_gradient() {
        // d/da (a . a) at a = [2] -> [4]
        let mut g = Graph::new();
        let a = g.param(Tensor::new(vec![1], vec![2.0]).unwrap());
        let p = g.hadamard(a, a).unwrap();
        let grads = g.backward(p).unwrap();
        assert_eq!(grads.get(a).unwrap().data(), &[4.0]);
    }

    #[test]
    fn mse_examples() {
        let mut g = Graph::new();
        let p = g.param(Tensor::new(vec![2], vec![1.0, 0.0]).unwrap());
        let t = g.constant(Tensor::new(vec![2], vec![0.0, 0.0]).unwrap());
        let l = g.mse_loss(p, t).unwrap();
        assert_eq!(g.value(l).item(), 0.5);

        let mut g2 = Graph::new();
        let p2 = g2.param(Tensor::new(vec![3], vec![0.25, -1.0, 2.0]).unwrap());
        let t2 = g2.constant(Tensor::new(vec![3], vec![0.25, -1.0, 2.0]).unwrap());
        let l2 = g2.mse_loss(p2, t2).unwrap();
        assert_eq!(g2.value(l2).item(), 0.0);
    }

    #[test]
    fn mse_gradient_formula() {
        // grad wrt pred = 2 (pred - target) / n
        let mut g = Graph::new();
        let p = g.param(Tensor::new(vec![2], vec![1.0, 3.0]).unwrap());
        let t = g.constant(Tensor::new(vec![2], vec![0.0, 1.0]).unwrap());
        let l = g.mse_loss(p, t).unwrap();
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(p).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn backward_twice_identical() {
        let mut g = Graph::new();
        let w = g.param(Tensor::new(vec![2], vec![0.3, -1.2]).unwrap());
        let s = g.sin(w);
        let h = g.hadamard(s, w).unwrap();
        let loss = g.sum(h);
        let g1 = g.backward(loss).unwrap();
        let g2 = g.backward(loss).unwrap();
        assert_eq!(g1.get(w).unwrap().data(), g2.get(w).unwrap().data());
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut g = Graph::new();
        let w = g.param(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let y = g.relu(w);
        assert!(matches!(
            g.backward(y),
            Err(Error::NonScalarRoot { .. })
        ));
    }

    #[test]
    fn matmul_sum_gradient_is_ones_times_bt() {
        // d sum(A B) / dA = ones * B^T
        let a = Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5]).unwrap();
        let b = Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut g = Graph::new();
        let an = g.param(a);
        let bn = g.constant(b.clone());
        let c = g.matmul(an, bn).unwrap();
        let s = g.sum(c);
        let grads = g.backward(s).unwrap();
        let ones = Tensor::matrix(2, 2, vec![1.0; 4]).unwrap();
        let expected = matmul_nt(&ones, &b).unwrap();
        for (x, y) in grads.get(an).unwrap().data().iter().zip(expected.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_matches_matmul_plus_bias() {
        let x = Tensor::matrix(3, 2, vec![1.0, 2.0, -1.0, 0.5, 0.0, 3.0]).unwrap();
        let w = Tensor::matrix(2, 2, vec![0.5, -0.5, 1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![2], vec![10.0, -10.0]).unwrap();
        let mut g = Graph::new();
        let (xn, wn, bn) = (g.constant(x.clone()), g.param(w.clone()), g.param(b));
        let y = g.linear(xn, wn, bn).unwrap();
        let manual = matmul_nt(&x, &w).unwrap();
        for (row, mrow) in g.value(y).data().chunks(2).zip(manual.data().chunks(2)) {
            assert!((row[0] - (mrow[0] + 10.0)).abs() < 1e-12);
            assert!((row[1] - (mrow[1] - 10.0)).abs() < 1e-12);
        }
    }
}
