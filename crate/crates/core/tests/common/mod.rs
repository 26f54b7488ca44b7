//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical kernels.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(n: usize, seed: u64) -> Vec<C> {
    let mut r = rng(seed);
    (0..n).map(|_| C::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect()
}

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `N^{-1/2} Σ_l exp(∓2πi jl/N) u(l)` by the double loop.
pub fn naive_dft(u: &[C], inverse: bool) -> Vec<C> {
    let n = u.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|l| {
                    let ph = sign * 2.0 * PI * ((j * l) % n) as f64 / n as f64;
                    u[l] * C::new(ph.cos(), ph.sin())
                })
                .sum::<C>()
                * s
        })
        .collect()
}

/// Row-major dense matrix helpers (n×n).
pub fn matmul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut c = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn adjoint(a: &[C], n: usize) -> Vec<C> {
    let mut b = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            b[j * n + i] = a[i * n + j].conj();
        }
    }
    b
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigenvalues(a: &[C], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum();
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // M ← J* M J with J = [[c, s·phase], [-s·conj(phase), c]].
                let jpp = C::new(c, 0.0);
                let jpq = phase * s;
                let jqp = -phase.conj() * s;
                let jqq = C::new(c, 0.0);
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = mkp * jpp + mkq * jqp;
                    m[k * n + q] = mkp * jpq + mkq * jqq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = jpp.conj() * mpk + jqp.conj() * mqk;
                    m[q * n + k] = jpq.conj() * mpk + jqq.conj() * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Largest singular value from the Hermitian eigenvalues of `A*A`.
pub fn svd_max(a: &[C], n: usize) -> f64 {
    let g = matmul(&adjoint(a, n), a, n);
    hermitian_eigenvalues(&g, n)[0].max(0.0).sqrt()
}

/// Characteristic polynomial coefficients `c_0..c_n` (monic, `c_n = 1`) by
/// Faddeev–LeVerrier.
pub fn char_poly(a: &[C], n: usize) -> Vec<C> {
    let mut coeffs = vec![C::new(0.0, 0.0); n + 1];
    coeffs[n] = C::new(1.0, 0.0);
    let mut m = vec![C::new(0.0, 0.0); n * n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = matmul(a, &m, n);
        for i in 0..n {
            next[i * n + i] += coeffs[n - k + 1];
        }
        m = next;
        let am = matmul(a, &m, n);
        let tr: C = (0..n).map(|i| am[i * n + i]).sum();
        coeffs[n - k] = -tr / k as f64;
    }
    coeffs
}

/// Roots of a monic polynomial by Durand–Kerner iteration.
pub fn poly_roots(coeffs: &[C]) -> Vec<C> {
    let n = coeffs.len() - 1;
    let eval = |z: C| coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c);
    let seed = C::new(0.4, 0.9);
    let mut roots: Vec<C> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = C::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Greedy matching distance between two multisets.
pub fn multiset_distance(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Composite Simpson rule on [a, b] with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn bump_oracle(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// `f(x)` from its definition with a fine Simpson rule.
pub fn f_oracle(x: f64) -> f64 {
    static C0: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    let c0 = *C0.get_or_init(|| simpson(bump_oracle, 0.0, 1.0, 20_000));
    let upper = (1.02 * x - 0.01).clamp(0.0, 1.0);
    if upper == 0.0 {
        return 0.0;
    }
    let panels = ((upper * 20_000.0).ceil() as usize).max(2) & !1;
    simpson(bump_oracle, 0.0, upper, panels.max(2)) / c0
}

pub fn chi_oracle(tau: f64, x: f64) -> f64 {
    f_oracle(x / tau) * f_oracle((1.0 - x) / tau)
}
