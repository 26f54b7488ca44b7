mod common;

use common::{naive_dft, norm, random_vec};
use num_complex::Complex64 as C;
use open_baker::dft::{
    apply_multiplier, circle_distance, dft, discretize, fourier_multiplier, idft, GridFunction,
};
use open_baker::{make_cutoff, ComplexVector};
use proptest::prelude::*;

fn cv(v: Vec<C>) -> ComplexVector {
    ComplexVector::new(v).unwrap()
}

#[test]
fn small_transforms() {
    let one = dft(&cv(vec![C::new(2.0, -1.0)]));
    assert_eq!(one.as_slice(), &[C::new(2.0, -1.0)]);

    let two = dft(&cv(vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]));
    let h = 1.0 / 2f64.sqrt();
    for z in two.iter() {
        assert!((z - C::new(h, 0.0)).norm() < 1e-15);
    }
    let back = idft(&two);
    assert!((back[0] - C::new(1.0, 0.0)).norm() < 1e-15 && back[1].norm() < 1e-15);

    let four = dft(&cv(vec![C::new(1.0, 0.0); 4]));
    assert!((four[0] - C::new(2.0, 0.0)).norm() < 1e-15);
    assert!(four.iter().skip(1).all(|z| z.norm() < 1e-15));
}

#[test]
fn fast_matches_naive_kernel() {
    for (i, n) in [3usize, 5, 12, 100, 125].into_iter().enumerate() {
        let u = random_vec(n, 10 + i as u64);
        let fast = dft(&cv(u.clone()));
        let slow = naive_dft(&u, false);
        let inv_fast = idft(&cv(u.clone()));
        let inv_slow = naive_dft(&u, true);
        for j in 0..n {
            assert!((fast[j] - slow[j]).norm() < 1e-10, "N={n} entry {j}");
            assert!((inv_fast[j] - inv_slow[j]).norm() < 1e-10, "N={n} entry {j}");
        }
    }
}

#[test]
fn round_trip_length_eight() {
    let u = random_vec(8, 3);
    let back = idft(&dft(&cv(u.clone())));
    let diff: Vec<C> = back.iter().zip(&u).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-12 * norm(&u));
}

#[test]
fn discretize_examples() {
    assert_eq!(discretize(|x| x, 4).values(), &[0.0, 0.25, 0.5, 0.75]);
    assert_eq!(discretize(|_| 1.0, 3).values(), &[1.0, 1.0, 1.0]);
    let chi = make_cutoff(0.05).unwrap();
    assert_eq!(discretize(|x| chi.eval(x), 100).values()[50], 1.0);
}

/// `F* diag(φ) F` assembled from three explicit dense matrices.
fn triple_product(phi: &[f64]) -> Vec<C> {
    let n = phi.len();
    let f: Vec<C> = (0..n)
        .flat_map(|j| {
            (0..n).map(move |l| {
                let ph = -2.0 * std::f64::consts::PI * (j * l) as f64 / n as f64;
                C::new(ph.cos(), ph.sin()) / (n as f64).sqrt()
            })
        })
        .collect();
    let d: Vec<C> = (0..n * n).map(|k| if k / n == k % n { C::new(phi[k / n], 0.0) } else { C::new(0.0, 0.0) }).collect();
    common::matmul(&common::adjoint(&f, n), &common::matmul(&d, &f, n), n)
}

#[test]
fn multiplier_examples() {
    let id = fourier_multiplier(&GridFunction::constant(6, 1.0));
    let zero = fourier_multiplier(&GridFunction::constant(6, 0.0));
    for i in 0..6 {
        for j in 0..6 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((id[(i, j)] - C::new(e, 0.0)).norm() < 1e-12);
            assert!(zero[(i, j)].norm() < 1e-15);
        }
    }
    let phi = GridFunction::indicator(4, |j| j < 2);
    let m = fourier_multiplier(&phi);
    let oracle = triple_product(phi.values());
    for i in 0..4 {
        for j in 0..4 {
            assert!((m[(i, j)] - oracle[i * 4 + j]).norm() < 1e-12);
        }
    }
}

#[test]
fn indicator_multiplier_is_orthogonal_projection() {
    let phi = GridFunction::indicator(15, |j| j % 3 != 1);
    let p = fourier_multiplier(&phi);
    let p2 = &p * &p;
    let pa = p.adjoint();
    assert!((&p2 - &p).max_abs() < 1e-10);
    assert!((&pa - &p).max_abs() < 1e-10);
    let u = random_vec(15, 9);
    let direct = apply_multiplier(&phi, &u);
    let dense = p.matvec(&u);
    for (a, b) in direct.iter().zip(&dense) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn circle_distance_examples() {
    assert!((circle_distance(0.1, 0.9) - 0.2).abs() < 1e-15);
    assert_eq!(circle_distance(0.25, 0.25), 0.0);
    assert_eq!(circle_distance(0.0, 0.5), 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitarity_and_inverse(n in 1usize..4096, seed in any::<u64>()) {
        let u = random_vec(n, seed);
        let fu = dft(&cv(u.clone()));
        let nu = norm(&u);
        prop_assert!((fu.norm() - nu).abs() <= 1e-12 * nu);
        let back = idft(&fu);
        let diff: Vec<C> = back.iter().zip(&u).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-12 * nu);
    }

    #[test]
    fn circle_distance_range(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let d = circle_distance(x, y);
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!((d - circle_distance(y, x)).abs() < 1e-15);
    }
}
