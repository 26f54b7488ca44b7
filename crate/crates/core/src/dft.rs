//! Unitary discrete Fourier transform on ℤ_N, discretization of functions on
//! [0,1], and Fourier multipliers.
//!
//! Convention: `(F_N u)(j) = N^{-1/2} Σ_l exp(-2πi j l / N) u(l)`. Any length
//! N ≥ 1 is supported; the fast path is a mixed-radix/Bluestein plan from
//! `rustfft`, cached per thread.

use std::cell::RefCell;

use rustfft::{FftDirection, FftPlanner};

use crate::error::{invalid, Result};
use crate::matrix::{ComplexMatrix, ComplexVector, C64};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_in_place(buf: &mut [C64], direction: FftDirection) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
    fft.process(buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= s);
}

/// Applies the unitary forward transform `F_N` in place.
pub fn dft_in_place(buf: &mut [C64]) {
    transform_in_place(buf, FftDirection::Forward);
}

/// Applies the inverse (adjoint) transform `F_N*` in place.
pub fn idft_in_place(buf: &mut [C64]) {
    transform_in_place(buf, FftDirection::Inverse);
}

pub fn dft(u: &ComplexVector) -> ComplexVector {
    let mut out = u.clone();
    dft_in_place(&mut out);
    out
}

pub fn idft(u: &ComplexVector) -> ComplexVector {
    let mut out = u.clone();
    idft_in_place(&mut out);
    out
}

/// Samples of a real function on the grid `{ j/N : j = 0..N-1 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("grid function needs at least one sample");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("grid function values must be finite");
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self { values: vec![value; n] }
    }

    /// Indicator of a set of grid indices.
    pub fn indicator(n: usize, member: impl Fn(usize) -> bool) -> Self {
        Self { values: (0..n).map(|j| if member(j) { 1.0 } else { 0.0 }).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_unit_valued(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Pointwise `1 - self`.
    pub fn complement(&self) -> Self {
        Self { values: self.values.iter().map(|v| 1.0 - v).collect() }
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

/// `values[j] = f(j/N)`.
pub fn discretize(f: impl Fn(f64) -> f64, n: usize) -> GridFunction {
    GridFunction { values: (0..n).map(|j| f(j as f64 / n as f64)).collect() }
}

/// Dense `F_N* diag(φ) F_N`.
///
/// The product is circulant: entry (j, k) depends only on (j - k) mod N, so
/// one inverse transform of φ gives the whole matrix.
pub fn fourier_multiplier(phi: &GridFunction) -> ComplexMatrix {
    let n = phi.len();
    let mut kernel: Vec<C64> = phi.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    idft_in_place(&mut kernel);
    // idft carries N^{-1/2}; the multiplier kernel needs N^{-1}.
    let s = 1.0 / (n as f64).sqrt();
    kernel.iter_mut().for_each(|x| *x *= s);
    ComplexMatrix::from_fn(n, n, |j, k| kernel[(j + n - k) % n])
}

/// Matrix-free `F_N* diag(φ) F_N u`.
pub fn apply_multiplier(phi: &GridFunction, u: &[C64]) -> Vec<C64> {
    assert_eq!(phi.len(), u.len(), "multiplier length mismatch");
    let mut buf = u.to_vec();
    dft_in_place(&mut buf);
    buf.iter_mut().zip(&phi.values).for_each(|(x, &w)| *x *= w);
    idft_in_place(&mut buf);
    buf
}

/// Distance on [0,1] with 0 and 1 identified.
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}
