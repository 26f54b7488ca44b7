mod common;

use common::{chi_oracle, f_oracle};
use open_baker::cutoff::{
    bump_antiderivative, bump_antiderivative_quadrature, estimate_decay_envelope, sample_fourier_abs, EnvelopeKind,
    EnvelopeOptions,
};
use open_baker::{make_cutoff, CutoffFunction};
use proptest::prelude::*;

#[test]
fn antiderivative_endpoints_and_midpoint() {
    assert_eq!(bump_antiderivative(0.0), 0.0);
    assert_eq!(bump_antiderivative(0.01 / 1.02), 0.0);
    assert!((bump_antiderivative(1.0) - 1.0).abs() < 1e-14);
    assert!((bump_antiderivative(1.01 / 1.02) - 1.0).abs() < 1e-14);
    let mid = bump_antiderivative(0.5);
    assert!(mid > 0.0 && mid < 1.0);
    assert!((mid - f_oracle(0.5)).abs() < 1e-10, "{mid} vs {}", f_oracle(0.5));
    assert!((bump_antiderivative_quadrature(0.5) - f_oracle(0.5)).abs() < 1e-10);
}

#[test]
fn antiderivative_tracks_oracle() {
    for i in 0..=40 {
        let x = i as f64 / 40.0;
        assert!((bump_antiderivative(x) - f_oracle(x)).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn cutoff_examples() {
    let chi = make_cutoff(0.05).unwrap();
    assert_eq!(chi.eval(0.5), 1.0);
    assert_eq!(chi.eval(0.0), 0.0);
    assert_eq!(chi.eval(1.0), 0.0);
    let chi = make_cutoff(0.1).unwrap();
    let v = chi.eval(0.05);
    assert!(v > 0.0 && v < 1.0);
    assert!((v - chi_oracle(0.1, 0.05)).abs() < 1e-10);
    assert_eq!(chi.gevrey_order(), 2.0);
}

#[test]
fn rejects_bad_tightness() {
    for tau in [0.0, -0.1, 0.51, f64::NAN] {
        assert!(make_cutoff(tau).is_err(), "tau={tau}");
    }
    assert!(make_cutoff(0.5).is_ok());
}

/// Support edge of `x ↦ f(x/τ)` by bisection on where the integration range
/// of f becomes nonempty. (Bisecting on `f > 0` itself would stop short:
/// the integrand underflows to 0 well inside the support.)
fn support_edge_oracle(tau: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, tau);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if 1.02 * (mid / tau) - 0.01 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn support_distance() {
    let d05 = make_cutoff(0.05).unwrap().support_distance_to_zero();
    let d10 = make_cutoff(0.1).unwrap().support_distance_to_zero();
    assert!((d05 - 0.05 * 0.01 / 1.02).abs() < 1e-15);
    assert!((d05 - support_edge_oracle(0.05)).abs() < 1e-12);
    assert!((d10 - 2.0 * d05).abs() < 1e-15);
    for tau in [0.01, 0.05, 0.2, 0.5] {
        assert!(make_cutoff(tau).unwrap().support_distance_to_zero() < tau);
    }
}

#[test]
fn zero_stub_gets_zero_envelope() {
    let stub = CutoffFunction::constant(0.0);
    let env = estimate_decay_envelope(&stub, EnvelopeKind::Gevrey).unwrap();
    assert_eq!(env.scale, 0.0);
}

#[test]
fn envelope_dominates_in_and_out_of_sample() {
    let chi = make_cutoff(0.05).unwrap();
    let env = estimate_decay_envelope(&chi, EnvelopeKind::Gevrey).unwrap();
    assert_eq!(env.order, 2.0);
    let samples = sample_fourier_abs(&chi, &EnvelopeOptions::default());
    assert!(env.dominates(&samples));
    let fine = EnvelopeOptions { spacing: 0.0937, ..EnvelopeOptions::default() };
    let refined = sample_fourier_abs(&chi, &fine);
    assert!(env.dominates(&refined));
    for w in [1.0, 2.0, 10.0, 100.0, 1000.0].windows(2) {
        assert!(env.eval(w[1]) <= env.eval(w[0]));
        assert!(env.eval(w[1]) > 0.0);
    }
}

#[test]
fn fourier_transform_matches_direct_quadrature() {
    let chi = make_cutoff(0.2).unwrap();
    for xi in [0.0, 1.0, 3.5, 12.0] {
        let re = common::simpson(|x| chi_oracle(0.2, x) * (2.0 * std::f64::consts::PI * xi * x).cos(), 0.0, 1.0, 4000);
        let im = common::simpson(|x| chi_oracle(0.2, x) * (2.0 * std::f64::consts::PI * xi * x).sin(), 0.0, 1.0, 4000);
        let oracle = (re * re + im * im).sqrt();
        assert!((chi.fourier_abs(xi) - oracle).abs() < 1e-9, "xi={xi}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cutoff_invariants(tau in 0.01f64..=0.5, seed in any::<u64>()) {
        let chi = make_cutoff(tau).unwrap();
        let mut r = common::rng(seed);
        use rand::Rng;
        for _ in 0..300 {
            let x: f64 = r.random::<f64>() * 1.4 - 0.2;
            let v = chi.eval(x);
            prop_assert!((0.0..=1.0).contains(&v));
            if x <= 0.0 || x >= 1.0 {
                prop_assert_eq!(v, 0.0);
            }
            if (tau..=1.0 - tau).contains(&x) {
                prop_assert!((v - 1.0).abs() < 1e-10);
            }
            if (0.0..=1.0).contains(&x) {
                prop_assert!((v - chi.eval(1.0 - x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn antiderivative_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bump_antiderivative(lo) <= bump_antiderivative(hi) + 1e-12);
    }
}

#[test]
fn envelope_tail_integral_matches_direct_quadrature() {
    use open_baker::cutoff::DecayEnvelope;
    let env = DecayEnvelope::gevrey(2.0, 0.7, 2.0);
    for x in [0.0f64, 0.5, 4.0, 30.0] {
        // Closed form for s = 2: 2C e^{-c√x}(√x/c + 1/c²).
        let direct = 4.0 * (-0.7 * x.sqrt()).exp() * (x.sqrt() / 0.7 + 1.0 / 0.49);
        let tail = env.tail_integral(x);
        assert!((tail - direct).abs() <= 1e-8 * direct, "x={x}: {tail} vs {direct}");
    }
}
