use std::fmt::Write as _;
use std::fs;

use cafe_core::encodings::{BasisOrigin, ChebyshevConfig, FrequencyBasis};
use cafe_core::harness::write_atomic;
use cafe_core::model::{
    init_model, BackboneMlp, CafeModel, DenseLayer, FourierSpec, ModelSpec,
    ParallelLinearStack,
};
use cafe_core::rng::{stream_rng, RngStream};
use cafe_core::spectrum::{
    base_1d, compute_ntk, empirical_spectrum_dft, enumerate_cafe_frequencies,
    enumerate_union_form, expand_cafe_symbolically, NtkBudget, DEFAULT_ENUMERATION_BUDGET,
};
use cafe_core::Tensor;

use super::{ntk_inputs, CliResult};
use crate::config::RunConfig;

/// Builds a 1-D integer-frequency encoder with seeded random weights for
/// the oracle checks.
fn integer_model(cfg: &RunConfig) -> CliResult<CafeModel> {
    let m = cfg.freqs.len();
    let width = cfg.width.min(8);
    let layers = cfg.parallel_layers.max(1);
    let omega = Tensor::matrix(m, 1, cfg.freqs.iter().map(|&f| f as f64).collect())?;
    let basis = FrequencyBasis::from_matrix(omega, BasisOrigin::Pe { base: 1.0 })?;
    let mut rng = stream_rng(cfg.seed, RngStream::Init);
    let bound = 1.0 / (2.0 * m as f64).sqrt();
    let mut layer = || DenseLayer {
        weight: Tensor::matrix(
            width,
            2 * m,
            (0..width * 2 * m).map(|_| rng.next_range(-bound, bound)).collect(),
        )
        .expect("layer shape"),
        bias: Tensor::new(vec![width], (0..width).map(|_| rng.next_range(-bound, bound)).collect())
            .expect("bias shape"),
    };
    Ok(CafeModel {
        basis,
        cheb: ChebyshevConfig::new(0),
        stack: ParallelLinearStack {
            layers: (0..layers).map(|_| layer()).collect(),
        },
        mlp: BackboneMlp {
            hidden: vec![],
            output: DenseLayer {
                weight: Tensor::matrix(1, width, vec![0.0; width])?,
                bias: Tensor::zeros(vec![1]),
            },
        },
        input_dim: 1,
    })
}

/// Enumerates the admissible set, expands the encoder symbolically,
/// validates the empirical DFT, and dumps NTK eigenvalues for the
/// stacked encoder against a parameter-matched feature-MLP baseline.
pub fn run_spectrum(cfg: &RunConfig) -> CliResult<()> {
    if cfg.freqs.is_empty() {
        return Err("spectrum needs `freqs` (comma-separated integer frequencies)".into());
    }
    fs::create_dir_all(&cfg.out)?;
    let layers = cfg.parallel_layers.max(1);
    let base = base_1d(&cfg.freqs);
    let admissible = enumerate_cafe_frequencies(&base, layers, DEFAULT_ENUMERATION_BUDGET)?;
    let union = enumerate_union_form(&base, layers, DEFAULT_ENUMERATION_BUDGET)?;
    let listed: Vec<i64> = admissible.iter().map(|v| v.components()[0]).collect();
    println!("base {:?}, N = {layers}", cfg.freqs);
    println!("admissible frequencies ({}): {listed:?}", listed.len());
    println!(
        "theorem forms equal: {}",
        if admissible == union { "PASS" } else { "FAIL" }
    );

    let mut csv = String::from("frequency\n");
    for f in &listed {
        let _ = writeln!(csv, "{f}");
    }
    write_atomic(cfg.out.join("spectrum_set.csv"), csv.as_bytes())?;

    // symbolic expansion (containment asserted inside)
    let model = integer_model(cfg)?;
    let expansion = expand_cafe_symbolically(&model, DEFAULT_ENUMERATION_BUDGET)?;
    let support: Vec<i64> = expansion.support.iter().map(|v| v.components()[0]).collect();
    println!("symbolic support ({}): {support:?}", support.len());
    println!("symbolic containment: PASS");

    let scan = empirical_spectrum_dft(&model, cfg.dft_grid, DEFAULT_ENUMERATION_BUDGET)?;
    let bins: Vec<u64> = scan.active.iter().copied().collect();
    println!("dft active bins (grid {}): {bins:?}", scan.grid);
    println!("containment: {}", if scan.contained { "PASS" } else { "FAIL" });
    if !scan.contained {
        return Err("dft containment violated: active bins escape the admissible set".into());
    }

    // NTK dump: stacked encoder vs parameter-matched feature MLP
    let cafe_spec = ModelSpec {
        input_dim: 1,
        fourier: FourierSpec::Rff {
            m: cfg.num_frequencies,
            scale: cfg.scale,
        },
        cheb_order: 0,
        parallel_layers: layers,
        width: cfg.width,
        mlp_depth: cfg.mlp_depth,
        output_dim: 1,
    };
    let cafe = init_model(&cafe_spec, cfg.seed)?;
    let target = cafe.count_params();
    let rff = init_model(&baseline_spec(&cafe_spec, target), cfg.seed)?;
    let budget = NtkBudget {
        max_inputs: 256,
        max_params: 50_000,
    };
    let inputs = ntk_inputs(128);
    let k_cafe = compute_ntk(&cafe, &inputs, budget)?;
    let k_rff = compute_ntk(&rff, &inputs, budget)?;
    for (name, k) in [("cafe", &k_cafe), ("rff", &k_rff)] {
        let asym = k.max_asymmetry();
        let eigs = k.eigenvalues();
        let (max, min) = (eigs[0], *eigs.last().expect("non-empty spectrum"));
        let psd = min >= -1e-8 * max;
        println!(
            "ntk {name}: symmetric {} (max asym {asym:.2e}), psd {} (eig range [{min:.3e}, {max:.3e}])",
            if asym < 1e-10 { "PASS" } else { "FAIL" },
            if psd { "PASS" } else { "FAIL" }
        );
        if asym >= 1e-10 || !psd {
            return Err(format!("ntk structure violated for {name}").into());
        }
    }
    let mut csv = String::from("index,cafe,rff\n");
    for (i, (a, b)) in k_cafe.eigenvalues().iter().zip(k_rff.eigenvalues()).enumerate() {
        let _ = writeln!(csv, "{i},{a:.12e},{b:.12e}");
    }
    write_atomic(cfg.out.join("ntk_eigenvalues.csv"), csv.as_bytes())?;
    println!("wrote {} and {}",
        cfg.out.join("spectrum_set.csv").display(),
        cfg.out.join("ntk_eigenvalues.csv").display()
    );
    Ok(())
}

/// Feature-MLP spec with two hidden layers and the frequency count
/// chosen so the parameter total matches the stacked encoder's from
/// above (ties land exactly for scalar outputs):
/// params = W(2M') + W + (W^2 + W) + (W + 1) = 2W M' + W^2 + 3W + 1.
pub fn baseline_spec(cafe: &ModelSpec, target_params: usize) -> ModelSpec {
    let width = cafe.width;
    let fixed = width * width + 3 * width + 1;
    let per_m = 2 * width;
    let m = target_params.saturating_sub(fixed).div_ceil(per_m).max(1);
    ModelSpec {
        input_dim: cafe.input_dim,
        fourier: match cafe.fourier {
            FourierSpec::Rff { scale, .. } => FourierSpec::Rff { m, scale },
            FourierSpec::Pe { base, .. } => FourierSpec::Pe { m, base },
        },
        cheb_order: 0,
        parallel_layers: 0,
        width,
        mlp_depth: 2,
        output_dim: cafe.output_dim,
    }
}
