//! Dense non-Hermitian eigenvalues, operator norms, eigenvalue counting and
//! log–log regression.

mod eig;
mod lu;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{inner, norm, ComplexMatrix, ComplexVector, C64};

pub use lu::LuDecomposition;

/// Where a spectrum came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Full,
    Trimmed,
    Perturbed,
}

impl SpectrumSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumSource::Full => "full",
            SpectrumSource::Trimmed => "trimmed",
            SpectrumSource::Perturbed => "perturbed",
        }
    }
}

/// Backward-error evidence for one computed eigenvalue: an upper bound on
/// `σ_min(H - λI)` for the Hessenberg form H, and its ratio to `‖H‖_F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResidual {
    pub lambda: C64,
    pub sigma_min_bound: f64,
    pub relative: f64,
}

/// Multiset of eigenvalues with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub residuals: Vec<EigenResidual>,
    pub source: SpectrumSource,
    /// Dimension N of the underlying ℓ²_N (not necessarily the matrix size).
    pub n: usize,
    pub spec_hash: u64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues sorted by decreasing modulus (ties broken by argument so
    /// the order is deterministic).
    pub fn sorted_by_modulus(&self) -> Vec<C64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.arg().total_cmp(&b.arg())));
        v
    }

    /// Eigenvalues with modulus above `tol`.
    pub fn nonzero(&self, tol: f64) -> Vec<C64> {
        self.eigenvalues.iter().copied().filter(|z| z.norm() > tol).collect()
    }

    pub fn max_relative_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.relative).fold(0.0, f64::max)
    }

    pub fn with_provenance(mut self, source: SpectrumSource, n: usize, spec_hash: u64) -> Self {
        self.source = source;
        self.n = n;
        self.spec_hash = spec_hash;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Number of eigenvalues to certify with a backward-error bound.
    pub residual_samples: usize,
    /// Total QR step budget is `step_factor · n`.
    pub step_factor: usize,
    pub balance: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { residual_samples: 10, step_factor: 40, balance: true }
    }
}

/// Stable content hash of a matrix (bit patterns of all entries).
pub fn matrix_hash(a: &ComplexMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    a.dims().hash(&mut h);
    for z in a.as_slice() {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

/// All eigenvalues of a square matrix, with multiplicity.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Spectrum> {
    eigenvalues_with(a, &EigenOptions::default())
}

pub fn eigenvalues_with(a: &ComplexMatrix, opts: &EigenOptions) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), actual: a.cols() });
    }
    if !a.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    let n = a.rows();
    let mut work = a.clone();
    if opts.balance {
        eig::balance(work.as_mut_slice(), n);
    }
    eig::hessenberg(work.as_mut_slice(), n);
    let hess = if opts.residual_samples > 0 { Some(work.clone()) } else { None };
    let outcome = eig::hessenberg_qr(work.as_mut_slice(), n, opts.step_factor * n.max(10));
    if outcome.unconverged.is_some() {
        return Err(Error::NoConvergence {
            matrix_hash: matrix_hash(a),
            dim: n,
            converged: outcome.eigenvalues.len(),
            partial: outcome.eigenvalues,
        });
    }
    let mut spectrum = Spectrum {
        eigenvalues: outcome.eigenvalues,
        residuals: Vec::new(),
        source: SpectrumSource::Full,
        n,
        spec_hash: matrix_hash(a),
    };
    if let Some(h) = hess {
        let scale = h.frobenius_norm();
        let sorted = spectrum.sorted_by_modulus();
        let count = opts.residual_samples.min(n);
        spectrum.residuals = (0..count)
            .map(|i| {
                let lambda = sorted[i * n / count];
                let sigma = eig::hessenberg_sigma_min_bound(&h, lambda);
                EigenResidual { lambda, sigma_min_bound: sigma, relative: if scale > 0.0 { sigma / scale } else { 0.0 } }
            })
            .collect();
    }
    Ok(spectrum)
}

/// Eigenvector for an (approximate) eigenvalue by inverse iteration, with
/// its residual `‖(A - λ)v‖` for the unit vector v.
pub fn eigenvector(a: &ComplexMatrix, lambda: C64) -> Result<(ComplexVector, f64)> {
    let n = a.rows();
    let floor = f64::EPSILON * a.frobenius_norm().max(f64::MIN_POSITIVE);
    let lu = LuDecomposition::with_pivot_floor(&a.shifted(lambda), floor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = ComplexVector::random_normalized(n, &mut rng).into_vec();
    for _ in 0..3 {
        let mut x = lu.solve(&v);
        let nx = norm(&x);
        if !nx.is_finite() || nx == 0.0 {
            return Err(Error::Singular(0));
        }
        x.iter_mut().for_each(|z| *z /= nx);
        v = x;
    }
    let r: Vec<C64> = a.matvec(&v).iter().zip(&v).map(|(av, x)| av - lambda * x).collect();
    Ok((ComplexVector::new(v)?, norm(&r)))
}

/// Largest-singular-value estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormEstimate {
    pub value: f64,
    /// `‖A*A x - θx‖ / θ` at termination of the best run.
    pub achieved_tolerance: f64,
    pub iterations: usize,
}

const NORM_TOL: f64 = 1e-8;
const NORM_MAX_KRYLOV: usize = 400;
const NORM_RESTARTS: u64 = 3;

/// `‖A‖₂` from the top eigenvalue of `A*A`, relative tolerance 1e-8, three
/// seeded random starts with the best estimate returned.
///
/// The power iteration is Krylov-accelerated (Lanczos with full
/// reorthogonalization): plain power steps stall for hours on the clustered
/// top singular values that localizer sandwiches and roundoff residuals
/// produce. Convergence is judged by the Ritz residual `β_k |y_k|`.
pub fn operator_norm(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    apply_adjoint: impl Fn(&[C64]) -> Vec<C64>,
    n: usize,
) -> OperatorNormEstimate {
    let mut best = OperatorNormEstimate { value: 0.0, achieved_tolerance: 0.0, iterations: 0 };
    if n == 0 {
        return best;
    }
    for restart in 0..NORM_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_55ed ^ restart);
        let start = ComplexVector::random_normalized(n, &mut rng).into_vec();
        let estimate = lanczos_gram(&apply, &apply_adjoint, start);
        if estimate.value >= best.value {
            best = estimate;
        }
    }
    best
}

fn lanczos_gram(
    apply: &impl Fn(&[C64]) -> Vec<C64>,
    apply_adjoint: &impl Fn(&[C64]) -> Vec<C64>,
    start: Vec<C64>,
) -> OperatorNormEstimate {
    let n = start.len();
    let kmax = n.min(NORM_MAX_KRYLOV);
    let mut basis: Vec<Vec<C64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = OperatorNormEstimate { value: 0.0, achieved_tolerance: f64::INFINITY, iterations: 0 };
    for k in 0..kmax {
        let v = &basis[k];
        let mut w = apply_adjoint(&apply(v));
        let a = inner(v, &w).re;
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        alpha.push(a);
        let invariant = b <= 1e-14 * a.abs().max(f64::MIN_POSITIVE) || k + 1 == kmax;
        if invariant || k < 40 || k % 5 == 0 {
            let (theta, y_last) = tridiagonal_top(&alpha, &beta);
            if theta <= 0.0 {
                if invariant {
                    return OperatorNormEstimate { value: 0.0, achieved_tolerance: 0.0, iterations: k + 1 };
                }
            } else {
                let rel = if invariant && k + 1 < kmax { 0.0 } else { b * y_last.abs() / theta };
                last = OperatorNormEstimate { value: theta.sqrt(), achieved_tolerance: rel, iterations: k + 1 };
                if rel <= NORM_TOL || invariant {
                    return last;
                }
            }
        }
        if invariant {
            break;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|z| z / b).collect());
    }
    last
}

/// Largest eigenvalue of the symmetric tridiagonal matrix (diagonal
/// `alpha`, off-diagonal `beta`) by Sturm bisection, with the last component
/// of its unit eigenvector by inverse iteration.
fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let radius = |i: usize| {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { beta[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..k).map(|i| alpha[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| alpha[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let off = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { off / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1e-300);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let scale = lo.abs().max(hi.abs());
    while hi - lo > 4.0 * f64::EPSILON * scale && hi - lo > f64::MIN_POSITIVE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = hi;
    if k == 1 {
        return (theta, 1.0);
    }
    let t = ComplexMatrix::from_fn(k, k, |i, j| {
        if i == j {
            C64::new(alpha[i] - theta, 0.0)
        } else if i + 1 == j {
            C64::new(beta[i], 0.0)
        } else if j + 1 == i {
            C64::new(beta[j], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let Ok(lu) = LuDecomposition::with_pivot_floor(&t, floor) else {
        return (theta, 1.0);
    };
    let mut y = vec![C64::new(1.0, 0.0); k];
    for _ in 0..3 {
        let x = lu.solve(&y);
        let nx = norm(&x);
        if !nx.is_finite() || nx == 0.0 {
            return (theta, 1.0);
        }
        y = x.into_iter().map(|z| z / nx).collect();
    }
    (theta, y[k - 1].norm())
}

/// Result of evaluating `𝒩(ν) = #{λ : |λ| ≥ M^{-ν}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingResult {
    pub nu: f64,
    pub count: usize,
    pub threshold: f64,
    /// Eigenvalues within 1e-10 of the threshold (counted or not).
    pub boundary: usize,
}

pub fn counting_function(spectrum: &Spectrum, base: usize, nu: f64) -> Result<CountingResult> {
    count_above(&spectrum.eigenvalues, base, nu)
}

pub fn count_above(eigenvalues: &[C64], base: usize, nu: f64) -> Result<CountingResult> {
    if !(nu >= 0.0) {
        return invalid(format!("nu must be nonnegative, got {nu}"));
    }
    let threshold = if nu.is_infinite() { 0.0 } else { (base as f64).powf(-nu) };
    let mut count = 0;
    let mut boundary = 0;
    for z in eigenvalues {
        let r = z.norm();
        if nu.is_infinite() {
            if r > 0.0 {
                count += 1;
            }
            continue;
        }
        if r >= threshold {
            count += 1;
        }
        if (r - threshold).abs() <= 1e-10 {
            boundary += 1;
        }
    }
    Ok(CountingResult { nu, count, threshold, boundary })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return invalid("log-log fit needs at least two points");
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return invalid("log-log fit needs positive coordinates");
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    linear_fit(&logs)
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LogLogFit> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return invalid("degenerate x-range in regression");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LogLogFit { slope, intercept, r2 })
}
