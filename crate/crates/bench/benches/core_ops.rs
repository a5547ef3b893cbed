use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use cafe_core::harness::{coord_grid_1d, desk_image, image_targets, make_coord_grid};
use cafe_core::model::{init_model, FourierSpec, ModelSpec};
use cafe_core::spectrum::{base_1d, enumerate_cafe_frequencies};
use cafe_core::{matmul, FeatureMask, Graph, SplitMix64, Tensor};

fn desk_spec() -> ModelSpec {
    ModelSpec {
        input_dim: 2,
        fourier: FourierSpec::Rff { m: 24, scale: 30.0 },
        cheb_order: 16,
        parallel_layers: 3,
        width: 64,
        mlp_depth: 1,
        output_dim: 1,
    }
}

fn bench_matmul(c: &mut Criterion) {
    let mut rng = SplitMix64::new(1);
    let a = Tensor::matrix(4096, 80, (0..4096 * 80).map(|_| rng.next_gaussian()).collect()).unwrap();
    let b = Tensor::matrix(80, 64, (0..80 * 64).map(|_| rng.next_gaussian()).collect()).unwrap();
    c.bench_function("matmul 4096x80x64", |bench| {
        bench.iter(|| black_box(matmul(black_box(&a), black_box(&b)).unwrap()))
    });
}

fn bench_encode(c: &mut Criterion) {
    let model = init_model(&desk_spec(), 1).unwrap();
    let coords = make_coord_grid(64, 64);
    c.bench_function("encode_batch 4096x2 (M24 J16)", |bench| {
        bench.iter(|| black_box(model.encode_batch(black_box(&coords), FeatureMask::None).unwrap()))
    });
}

fn bench_train_step(c: &mut Criterion) {
    let model = init_model(&desk_spec(), 1).unwrap();
    let img = desk_image(64, 7);
    let coords = make_coord_grid(64, 64);
    let targets = Arc::new(image_targets(&img));
    let features = Arc::new(model.encode_batch(&coords, FeatureMask::None).unwrap());
    c.bench_function("forward+backward 4096 px (N3 D64)", |bench| {
        bench.iter_batched(
            || (Arc::clone(&features), Arc::clone(&targets)),
            |(f, t)| {
                let mut g = Graph::new();
                let fid = g.constant(f);
                let tid = g.constant(t);
                let pass = model.forward_on_graph(&mut g, fid).unwrap();
                let loss = g.mse_loss(pass.output, tid).unwrap();
                black_box(g.backward(loss).unwrap());
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_enumeration(c: &mut Criterion) {
    let base = base_1d(&[1, 2, 3, 5, 7]);
    c.bench_function("enumerate admissible set (M5 N3)", |bench| {
        bench.iter(|| black_box(enumerate_cafe_frequencies(black_box(&base), 3, 10_000_000).unwrap()))
    });
}

fn bench_chebyshev(c: &mut Criterion) {
    let coords = coord_grid_1d(4096);
    let cfg = cafe_core::ChebyshevConfig::new(32);
    c.bench_function("chebyshev_encode 4096 pts J32", |bench| {
        bench.iter(|| {
            for r in 0..coords.rows() {
                black_box(cafe_core::chebyshev_encode(coords.row(r), &cfg).unwrap());
            }
        })
    });
}

criterion_group!(
    benches,
    bench_matmul,
    bench_encode,
    bench_train_step,
    bench_enumeration,
    bench_chebyshev
);
criterion_main!(benches);
