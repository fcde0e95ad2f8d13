mod common;

use common::brute_minima;
use dioph_core::lattice::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn minima_match_coefficient_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..40 {
        let k = 3 + i % 2;
        let b = random_unimodular_basis(k, &mut rng, 20.0);
        let got = successive_minima(&b).unwrap();
        let want = brute_minima(&b);
        assert_eq!(want.len(), k);
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * w, "{:?} vs {:?}", got.values, want);
        }
        assert!(got.certified);
    }
}

#[test]
fn witnesses_realise_the_minima() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let b = random_unimodular_basis(4, &mut rng, 30.0);
        let r = successive_minima(&b).unwrap();
        let mut c = DMatrix::zeros(4, 4);
        for (j, coeffs) in r.coefficients.iter().enumerate() {
            let v = b.cols() * nalgebra::DVector::from_iterator(4, coeffs.iter().map(|&x| x as f64));
            assert!((v.norm() - r.values[j]).abs() < 1e-9 * r.values[j]);
            for i in 0..4 {
                c[(i, j)] = coeffs[i] as f64;
            }
        }
        assert!(c.determinant().abs() > 0.5);
    }
}

#[test]
fn mahler_products_are_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let k = 2 + i % 4;
        let b = random_unimodular_basis(k, &mut rng, 50.0);
        for v in mahler_gap(&b).unwrap() {
            assert!(v >= 1.0 - 1e-9 && v <= mahler_upper(k), "k={k} {v}");
        }
    }
}

#[test]
fn short_vectors_are_all_within_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = random_unimodular_basis(3, &mut rng, 10.0);
    let lam = successive_minima(&b).unwrap().values;
    let mut seen = 0;
    for_each_short_vector(&b, lam[2], 1_000_000, |c, v| {
        assert!(c.iter().any(|&x| x != 0));
        assert!(v.iter().map(|x| x * x).sum::<f64>().sqrt() <= lam[2] * (1.0 + 1e-9));
        seen += 1;
        true
    })
    .unwrap();
    assert!(seen >= 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polar_of_polar_is_the_lattice(seed in 0u64..10_000, k in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_unimodular_basis(k, &mut rng, 40.0);
        let pp = polar_basis(&polar_basis(&b).unwrap()).unwrap();
        prop_assert!(b.same_lattice(&pp, 1e-8));
    }

    #[test]
    fn minima_are_unimodular_invariant(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_unimodular_basis(3, &mut rng, 20.0);
        let u = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0]);
        let b2 = LatticeBasis::new(b.cols() * u).unwrap();
        let x = successive_minima(&b).unwrap().values;
        let y = successive_minima(&b2).unwrap().values;
        for (a, c) in x.iter().zip(&y) {
            prop_assert!((a - c).abs() < 1e-9 * a);
        }
    }
}
