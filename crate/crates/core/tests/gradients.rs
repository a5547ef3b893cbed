//! Autodiff vs the central-difference oracle, per op and end to end.

use cafe_core::harness::coord_grid_1d;
use cafe_core::model::init_model;
use cafe_core::{
    audit_model_gradients, finite_diff_grad, max_rel_error, FourierSpec, Graph, ModelSpec,
    SplitMix64, Tensor, UnaryKind,
};

const H: f64 = 1e-6;
const TOL: f64 = 1e-6;

fn random_tensor(rng: &mut SplitMix64, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.next_gaussian()).collect()).unwrap()
}

/// Checks one graph construction f(params) -> scalar against finite
/// differences at the given parameter point.
fn check_graph(
    build: impl Fn(&mut Graph, &[cafe_core::NodeId]) -> cafe_core::NodeId,
    params: &[Tensor],
) {
    let mut g = Graph::new();
    let ids: Vec<_> = params.iter().map(|p| g.param(p.clone())).collect();
    let root = build(&mut g, &ids);
    let grads = g.backward(root).unwrap();
    let analytic: Vec<Tensor> = ids
        .iter()
        .map(|&id| grads.get(id).cloned().unwrap_or_else(|| Tensor::zeros(g.value(id).shape().to_vec())))
        .collect();
    let numeric = finite_diff_grad(
        |p| {
            let mut g = Graph::new();
            let ids: Vec<_> = p.iter().map(|t| g.param(t.clone())).collect();
            let root = build(&mut g, &ids);
            Ok(g.value(root).item())
        },
        params,
        H,
    )
    .unwrap();
    let err = max_rel_error(&analytic, &numeric, cafe_core::REL_ERROR_FLOOR);
    assert!(err < TOL, "worst relative error {err}");
}

#[test]
fn matmul_gradients_match_finite_differences() {
    let mut rng = SplitMix64::new(1);
    for _ in 0..100 {
        let (m, k, n) = (
            1 + rng.next_below(4),
            1 + rng.next_below(4),
            1 + rng.next_below(4),
        );
        let a = random_tensor(&mut rng, vec![m, k]);
        let b = random_tensor(&mut rng, vec![k, n]);
        check_graph(
            |g, ids| {
                let c = g.matmul(ids[0], ids[1]).unwrap();
                g.sum(c)
            },
            &[a, b],
        );
    }
}

#[test]
fn hadamard_and_unary_gradients_match_finite_differences() {
    let mut rng = SplitMix64::new(2);
    for kind in [UnaryKind::Sin, UnaryKind::Cos, UnaryKind::Relu] {
        for _ in 0..100 {
            let n = 1 + rng.next_below(6);
            let a = random_tensor(&mut rng, vec![n]);
            let b = random_tensor(&mut rng, vec![n]);
            check_graph(
                |g, ids| {
                    let u = g.unary(kind, ids[0]);
                    let h = g.hadamard(u, ids[1]).unwrap();
                    g.sum(h)
                },
                &[a.clone(), b.clone()],
            );
        }
    }
}

#[test]
fn mse_and_linear_gradients_match_finite_differences() {
    let mut rng = SplitMix64::new(3);
    for _ in 0..100 {
        let (b, input, out) = (
            1 + rng.next_below(5),
            1 + rng.next_below(4),
            1 + rng.next_below(3),
        );
        let x = random_tensor(&mut rng, vec![b, input]);
        let w = random_tensor(&mut rng, vec![out, input]);
        let bias = random_tensor(&mut rng, vec![out]);
        let target = random_tensor(&mut rng, vec![b, out]);
        check_graph(
            move |g, ids| {
                let t = g.constant(target.clone());
                let y = g.linear(ids[0], ids[1], ids[2]).unwrap();
                g.mse_loss(y, t).unwrap()
            },
            &[x, w, bias],
        );
    }
}

#[test]
fn random_three_layer_net_audit() {
    // ~20 parameters: 2 -> 3 -> 2 -> 1 relu chain under MSE
    let mut rng = SplitMix64::new(4);
    let w1 = random_tensor(&mut rng, vec![3, 2]);
    let b1 = random_tensor(&mut rng, vec![3]);
    let w2 = random_tensor(&mut rng, vec![2, 3]);
    let b2 = random_tensor(&mut rng, vec![2]);
    let w3 = random_tensor(&mut rng, vec![1, 2]);
    let b3 = random_tensor(&mut rng, vec![1]);
    let x = random_tensor(&mut rng, vec![6, 2]);
    let t = random_tensor(&mut rng, vec![6, 1]);
    check_graph(
        move |g, ids| {
            let xc = g.constant(x.clone());
            let tc = g.constant(t.clone());
            let z1 = g.linear(xc, ids[0], ids[1]).unwrap();
            let a1 = g.relu(z1);
            let z2 = g.linear(a1, ids[2], ids[3]).unwrap();
            let a2 = g.relu(z2);
            let z3 = g.linear(a2, ids[4], ids[5]).unwrap();
            g.mse_loss(z3, tc).unwrap()
        },
        &[w1, b1, w2, b2, w3, b3],
    );
}

#[test]
fn full_model_end_to_end_audit() {
    // ~200-parameter encoder model under MSE
    let spec = ModelSpec {
        input_dim: 2,
        fourier: FourierSpec::Rff { m: 4, scale: 3.0 },
        cheb_order: 3,
        parallel_layers: 2,
        width: 8,
        mlp_depth: 1,
        output_dim: 1,
    };
    let model = init_model(&spec, 11).unwrap();
    assert!(model.count_params() >= 200);
    let mut rng = SplitMix64::new(12);
    let coords = Tensor::matrix(10, 2, (0..20).map(|_| rng.next_range(-1.0, 1.0)).collect()).unwrap();
    let targets = Tensor::matrix(10, 1, (0..10).map(|_| rng.next_f64()).collect()).unwrap();
    let err = audit_model_gradients(&model, &coords, &targets, H).unwrap();
    assert!(err < TOL, "worst relative error {err}");
}

#[test]
fn forward_backward_stay_finite() {
    let spec = ModelSpec {
        input_dim: 1,
        fourier: FourierSpec::Rff { m: 6, scale: 10.0 },
        cheb_order: 5,
        parallel_layers: 3,
        width: 12,
        mlp_depth: 2,
        output_dim: 2,
    };
    let model = init_model(&spec, 21).unwrap();
    let coords = coord_grid_1d(64);
    let features = model.encode_batch(&coords, cafe_core::FeatureMask::None).unwrap();
    assert!(features.all_finite());
    let mut g = Graph::new();
    let f = g.constant(features);
    let pass = model.forward_on_graph(&mut g, f).unwrap();
    assert!(g.value(pass.output).all_finite());
    let s = g.sum(pass.output);
    let grads = g.backward(s).unwrap();
    for &id in &pass.params {
        assert!(grads.get(id).unwrap().all_finite());
    }
}
