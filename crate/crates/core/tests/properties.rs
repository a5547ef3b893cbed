//! Property tests for the algebraic invariants.

use cafe_core::harness::{parse_ppm, ppm_bytes, ImageGrid};
use cafe_core::spectrum::IntFreqVector;
use cafe_core::{
    chebyshev_encode, AdamHyper, AdamState, ChebyshevConfig, Graph, Tensor,
};
use proptest::prelude::*;

proptest! {
    /// Hadamard products commute and associate elementwise exactly.
    #[test]
    fn hadamard_commutative_associative(
        a in proptest::collection::vec(-10.0f64..10.0, 1..16),
        seed in any::<u64>(),
    ) {
        let mut rng = cafe_core::SplitMix64::new(seed);
        let b: Vec<f64> = (0..a.len()).map(|_| rng.next_range(-10.0, 10.0)).collect();
        let c: Vec<f64> = (0..a.len()).map(|_| rng.next_range(-10.0, 10.0)).collect();
        let t = |v: &[f64]| Tensor::new(vec![v.len()], v.to_vec()).unwrap();
        let mut g = Graph::new();
        let (an, bn, cn) = (g.constant(t(&a)), g.constant(t(&b)), g.constant(t(&c)));
        // commutativity is bitwise; associativity holds to rounding
        let ab = g.hadamard(an, bn).unwrap();
        let ba = g.hadamard(bn, an).unwrap();
        prop_assert_eq!(g.value(ab).data(), g.value(ba).data());
        let ab_c = {
            let x = g.hadamard(ab, cn).unwrap();
            g.value(x).data().to_vec()
        };
        let a_bc = {
            let bc = g.hadamard(bn, cn).unwrap();
            let x = g.hadamard(an, bc).unwrap();
            g.value(x).data().to_vec()
        };
        for (x, y) in ab_c.iter().zip(&a_bc) {
            let scale = x.abs().max(y.abs()).max(1.0);
            prop_assert!((x - y).abs() <= 1e-15 * scale, "{x} vs {y}");
        }
    }

    /// First-kind Chebyshev values stay inside [-1, 1] on the domain.
    #[test]
    fn chebyshev_bounded(x in -1.0f64..=1.0, order in 1usize..64) {
        let f = chebyshev_encode(&[x], &ChebyshevConfig::new(order)).unwrap();
        for &v in f.values() {
            prop_assert!(v.abs() <= 1.0 + 1e-12, "T_j({x}) = {v}");
        }
    }

    /// PPM serialization round-trips bitwise for arbitrary byte images.
    #[test]
    fn ppm_roundtrip(
        width in 1usize..12,
        height in 1usize..12,
        seed in any::<u64>(),
        rgb in any::<bool>(),
    ) {
        let channels = if rgb { 3 } else { 1 };
        let mut rng = cafe_core::SplitMix64::new(seed);
        let bytes: Vec<u8> = (0..width * height * channels)
            .map(|_| (rng.next_u64() & 0xff) as u8)
            .collect();
        let magic = if rgb { "P6" } else { "P5" };
        let mut file = format!("{magic}\n{width} {height}\n255\n").into_bytes();
        file.extend_from_slice(&bytes);
        let img = parse_ppm(&file).unwrap();
        prop_assert_eq!(ppm_bytes(&img), file);
    }

    /// Canonicalization is idempotent and sign-insensitive.
    #[test]
    fn canonicalization_idempotent(v in proptest::collection::vec(-9i64..=9, 1..4)) {
        let (c1, _) = IntFreqVector::canonical(v.clone());
        let (c2, _) = IntFreqVector::canonical(c1.components().to_vec());
        prop_assert_eq!(&c1, &c2);
        let negated: Vec<i64> = v.iter().map(|x| -x).collect();
        let (c3, _) = IntFreqVector::canonical(negated);
        prop_assert_eq!(&c1, &c3);
    }

    /// Adam never moves parameters under all-zero gradients.
    #[test]
    fn adam_zero_gradient_fixed_point(
        initial in proptest::collection::vec(-5.0f64..5.0, 1..8),
        steps in 1usize..10,
    ) {
        let mut p = Tensor::new(vec![initial.len()], initial.clone()).unwrap();
        let g = Tensor::zeros(vec![initial.len()]);
        let mut state = AdamState::new(&[&p], AdamHyper::default());
        for _ in 0..steps {
            state.step(&mut [&mut p], &[Some(&g)]).unwrap();
        }
        prop_assert_eq!(p.data(), initial.as_slice());
    }

    /// PSNR never exceeds the cap and responds to any perturbation.
    #[test]
    fn psnr_capped_and_sensitive(
        values in proptest::collection::vec(0.0f64..=1.0, 4..32),
        bump in 0.01f64..0.3,
    ) {
        let w = values.len();
        let img = ImageGrid::new(w, 1, 1, values.clone()).unwrap();
        let db_same = cafe_core::harness::psnr(&img, &img).unwrap();
        prop_assert_eq!(db_same, 99.0);
        let perturbed: Vec<f64> = values
            .iter()
            .map(|&v| if v < 0.5 { v + bump } else { v - bump })
            .collect();
        let img2 = ImageGrid::new(w, 1, 1, perturbed).unwrap();
        let db = cafe_core::harness::psnr(&img2, &img).unwrap();
        prop_assert!(db < 99.0);
    }
}
