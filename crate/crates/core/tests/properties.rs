mod common;

use common::*;
use depcov::basis::{frobenius_norm, unit_scaled_sample, weighted_sum_sq};
use depcov::{
    brownian_cov_truncated, coefficient_matrix, dcov_sq, dcov_sq_fast, dcov_sq_naive,
    dependence_map, schauder, uv_cov_sq, BasisSpec, CoefficientMatrix, Matrix, PairedSample,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn fast_matches_naive_across_sizes() {
    let sizes = [2, 3, 10, 100, 1000];
    for instance in 0..100u64 {
        let n = sizes[instance as usize % sizes.len()];
        let mut r = rng(instance);
        let x = uniform(&mut r, n, -3.0, 3.0);
        let y: Vec<f64> = match instance % 3 {
            0 => normal(&mut r, n),
            1 => x
                .iter()
                .zip(normal(&mut r, n))
                .map(|(a, e)| a * a + 0.3 * e)
                .collect(),
            _ => x.iter().map(|a| (a * 4.0).round()).collect(),
        };
        let naive = dcov_sq_naive(&scalar_sample(x.clone(), y.clone()));
        let fast = dcov_sq_fast(&x, &y).unwrap();
        assert!(
            rel_err(fast.dcov_sq, naive.dcov_sq) < 1e-9,
            "instance {instance} n={n}"
        );
        assert!(rel_err(fast.dvar_x_sq, naive.dvar_x_sq) < 1e-9);
        assert!(rel_err(fast.dvar_y_sq, naive.dvar_y_sq) < 1e-9);
    }
}

#[test]
fn fast_path_survives_large_offsets() {
    let mut r = rng(77);
    let x: Vec<f64> = uniform(&mut r, 500, 0.0, 1.0)
        .iter()
        .map(|v| 1e6 + v)
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| (v - 1e6).sqrt() + 0.1 * r.random::<f64>())
        .collect();
    let naive = dcov_sq_naive(&scalar_sample(x.clone(), y.clone()));
    let fast = dcov_sq_fast(&x, &y).unwrap();
    assert!(rel_err(fast.dcov_sq, naive.dcov_sq) < 1e-9);
}

#[test]
fn independent_dcov_shrinks_with_n() {
    let median_at = |n: usize| {
        median(
            (0..50u64)
                .map(|seed| {
                    let mut r = rng(10_000 + seed);
                    let x = uniform(&mut r, n, 0.0, 1.0);
                    let y = uniform(&mut r, n, 0.0, 1.0);
                    dcov_sq_fast(&x, &y).unwrap().dcov_sq
                })
                .collect(),
        )
    };
    assert!(median_at(5000) < median_at(100));
}

#[test]
fn multivariate_statistics_are_rotation_invariant() {
    for seed in 0..10u64 {
        let mut r = rng(500 + seed);
        let n = 40;
        let x = random_matrix(&mut r, n, 3);
        let y = random_matrix(&mut r, n, 2);
        let base = dcov_sq(&PairedSample::new(x.clone(), y.clone()).unwrap());
        let (qx, qy) = (random_rotation(&mut r, 3), random_rotation(&mut r, 2));
        let moved = PairedSample::new(
            rotate_and_shift(&x, &qx, &[1.0, -2.0, 5.0]),
            rotate_and_shift(&y, &qy, &[-3.0, 0.5]),
        )
        .unwrap();
        let other = dcov_sq(&moved);
        assert!(rel_err(base.dcov_sq, other.dcov_sq) < 1e-10);
        assert!(rel_err(base.dvar_x_sq, other.dvar_x_sq) < 1e-10);
        assert!(rel_err(base.dvar_y_sq, other.dvar_y_sq) < 1e-10);
        assert!((base.dcor - other.dcor).abs() < 1e-10);
    }
}

#[test]
fn schauder_matches_integrated_haar() {
    let mut r = rng(8);
    for level in 0..=5u32 {
        for i in 0..(1usize << (level + 1)) {
            for _ in 0..100 {
                let t: f64 = r.random();
                let quad = integrated_haar(i, t, 1 << 12);
                assert!((quad - schauder(i, t).unwrap()).abs() < 1e-6, "i={i} t={t}");
            }
        }
    }
}

#[test]
fn haar_is_orthonormal() {
    let level = 4;
    let count = 1usize << (level + 1);
    for i in 0..count {
        for j in 0..count {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((haar_inner(i, j, level) - want).abs() < 1e-12, "({i},{j})");
        }
    }
}

fn dependent_sample(seed: u64, n: usize) -> PairedSample {
    let mut r = rng(seed);
    let x = uniform(&mut r, n, 0.0, 1.0);
    let y: Vec<f64> = x
        .iter()
        .map(|v| (6.0 * v).sin() + r.random::<f64>())
        .collect();
    unit_scaled_sample(&scalar_sample(x, y)).unwrap()
}

#[test]
fn uv_cov_is_monotone_in_truncation() {
    for seed in 0..5 {
        let s = dependent_sample(seed, 400);
        let mut last = 0.0;
        for count in 1..=64 {
            let b = BasisSpec::prefix(count).unwrap();
            let v = uv_cov_sq(&coefficient_matrix(&s, &b, &b).unwrap());
            assert!(v >= last, "count {count}: {v} < {last}");
            last = v;
        }
        let mut last = 0.0;
        for level in 1..=6 {
            let v = brownian_cov_truncated(&s, level).unwrap();
            assert!(v >= last);
            last = v;
        }
    }
}

#[test]
fn swapping_margins_transposes_coefficients() {
    for seed in 0..5 {
        let s = dependent_sample(100 + seed, 300);
        let (bx, by) = (BasisSpec::at_level(3), BasisSpec::at_level(2));
        let a = coefficient_matrix(&s, &bx, &by).unwrap();
        let t = coefficient_matrix(&s.swapped(), &by, &bx).unwrap();
        let at = a.matrix().transpose();
        for (u, v) in at.as_slice().iter().zip(t.matrix().as_slice()) {
            assert!((u - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn map_total_matches_uv_cov() {
    for seed in 0..5 {
        let s = dependent_sample(200 + seed, 300);
        let bx = BasisSpec::at_level(3)
            .with_weights((0..16).map(|i| 1.0 / (1.0 + i as f64)).collect())
            .unwrap();
        let by = BasisSpec::at_level(3);
        let a = coefficient_matrix(&s, &bx, &by).unwrap();
        let map = dependence_map(&a);
        let uv = uv_cov_sq(&a);
        assert!(rel_err(map.total(), uv) <= 1e-12);
        let cell_sum: f64 = map.cells().iter().map(|c| c.contribution).sum();
        assert!(rel_err(cell_sum, uv) <= 1e-12);
        assert!(map.cells().iter().all(|c| c.contribution >= 0.0));
    }
}

#[test]
fn unit_weight_series_is_a_quarter_of_dcov() {
    // Σ_i S_i(s) S_i(t) → min(s,t), and the centered min kernel is half the
    // centered negative distance, so Σ a² → dcov²/4 as the level grows.
    let s = dependent_sample(300, 500);
    let b = BasisSpec::at_level(9);
    let fro = frobenius_norm(&coefficient_matrix(&s, &b, &b).unwrap());
    let dcov = dcov_sq_naive(&s).dcov_sq.sqrt();
    assert!(rel_err(2.0 * fro, dcov) < 1e-3, "{} vs {dcov}", 2.0 * fro);
}

proptest! {
    #[test]
    fn uv_cov_zero_iff_all_coefficients_zero(
        entries in proptest::collection::vec(prop_oneof![Just(0.0), -1.0f64..1.0], 16),
        weights in proptest::collection::vec(0.1f64..3.0, 8),
    ) {
        let m = Matrix::new(4, 4, entries.clone()).unwrap();
        let bx = BasisSpec::at_level(1).with_weights(weights[..4].to_vec()).unwrap();
        let by = BasisSpec::at_level(1).with_weights(weights[4..].to_vec()).unwrap();
        let a = CoefficientMatrix::new(m, bx, by, 10).unwrap();
        let v = uv_cov_sq(&a);
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v == 0.0, entries.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn scale_covariance(seed in 0u64..1000, a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let mut r = rng(seed);
        let x = uniform(&mut r, 30, -1.0, 1.0);
        let y: Vec<f64> = x.iter().map(|v| v * v + 0.2 * r.random::<f64>()).collect();
        let base = dcov_sq_fast(&x, &y).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
        let ys: Vec<f64> = y.iter().map(|v| b * v).collect();
        let scaled = dcov_sq_fast(&xs, &ys).unwrap();
        prop_assert!(rel_err(scaled.dcov_sq, a.abs() * b.abs() * base.dcov_sq) < 1e-10);
        prop_assert!((scaled.dcor - base.dcor).abs() < 1e-10);
    }

    #[test]
    fn weighted_sum_rejects_mismatched_weights(rows in 1usize..6, cols in 1usize..6, extra in 1usize..3) {
        let m = Matrix::zeros(rows, cols);
        prop_assert!(weighted_sum_sq(&m, &vec![1.0; rows + extra], &vec![1.0; cols]).is_err());
        prop_assert!(weighted_sum_sq(&m, &vec![1.0; rows], &vec![1.0; cols + extra]).is_err());
        prop_assert!(weighted_sum_sq(&m, &vec![1.0; rows], &vec![1.0; cols]).is_ok());
    }
}
