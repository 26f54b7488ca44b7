//! The smooth cutoff χ and the decay envelopes of its Fourier transform.
//!
//! The cutoff is built from the normalized antiderivative of the bump
//! `w(t) = exp(-1/(t(1-t)))` on (0,1):
//!
//! ```text
//! f(x) = (1/c0) ∫_{-∞}^{1.02x - 0.01} w(t) dt,    c0 = ∫_0^1 w(t) dt
//! χ(x) = f(x/τ) · f((1-x)/τ)
//! ```
//!
//! so that `f = 0` for `x ≤ 0.01/1.02`, `f = 1` for `x ≥ 1.01/1.02`, and
//! `χ ≡ 1` on `[τ, 1-τ]`. Without the `1/c0` factor `f` would plateau at
//! `c0 ≈ 7.0e-3` instead of 1.
//!
//! Fast evaluation goes through a 10⁵-cell cubic Hermite table of the
//! normalized antiderivative (slopes are the exact integrand). Direct
//! adaptive quadrature is kept as [`bump_antiderivative_quadrature`].

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;

const TABLE_CELLS: usize = 100_000;
const SHIFT: f64 = 0.01;
const STRETCH: f64 = 1.02;

/// The bump integrand `exp(-1/(t(1-t)))` on (0,1), zero elsewhere.
pub fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// `∫_0^1 exp(-1/(t(1-t))) dt` by adaptive quadrature.
pub fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| quad::integrate(bump, 0.0, 1.0, 1e-16))
}

/// Normalized antiderivative evaluated by direct quadrature (slow, exact up
/// to the quadrature tolerance).
pub fn bump_antiderivative_quadrature(x: f64) -> f64 {
    let t = STRETCH * x - SHIFT;
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        quad::integrate(bump, 0.0, t, 1e-16) / bump_mass()
    }
}

struct AntiderivativeTable {
    nodes: Vec<f64>,
    mass: f64,
}

impl AntiderivativeTable {
    fn get() -> &'static Self {
        static TABLE: OnceLock<AntiderivativeTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            // Integrate the left half only and mirror, so F(1-t) = 1 - F(t)
            // holds exactly. Evaluating w near t = 1 loses relative accuracy
            // in 1 - t, which otherwise biases the table by ~1e-12.
            let h = 1.0 / TABLE_CELLS as f64;
            let half = TABLE_CELLS / 2;
            let mut nodes = vec![0.0; TABLE_CELLS + 1];
            let (mut acc, mut comp) = (0.0f64, 0.0f64);
            for i in 0..half {
                let a = i as f64 * h;
                let x = quad::integrate(bump, a, a + h, 1e-20);
                let t = acc + x;
                comp += if acc.abs() >= x.abs() { (acc - t) + x } else { (x - t) + acc };
                acc = t;
                nodes[i + 1] = acc + comp;
            }
            let mass = 2.0 * (acc + comp);
            for i in 0..=half {
                nodes[i] /= mass;
                nodes[TABLE_CELLS - i] = 1.0 - nodes[i];
            }
            AntiderivativeTable { nodes, mass }
        })
    }

    /// Normalized `∫_0^t w` for t in [0,1].
    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let scaled = t * TABLE_CELLS as f64;
        let i = (scaled.floor() as usize).min(TABLE_CELLS - 1);
        let u = scaled - i as f64;
        let h = 1.0 / TABLE_CELLS as f64;
        let (y0, y1) = (self.nodes[i], self.nodes[i + 1]);
        let m0 = bump(i as f64 * h) / self.mass * h;
        let m1 = bump((i + 1) as f64 * h) / self.mass * h;
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        v.clamp(0.0, 1.0)
    }
}

/// `f(x)`: the normalized, shifted antiderivative of the bump. Monotone,
/// 0 for `x ≤ 0.01/1.02`, 1 for `x ≥ 1.01/1.02`.
pub fn bump_antiderivative(x: f64) -> f64 {
    AntiderivativeTable::get().eval(STRETCH * x - SHIFT)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Shape {
    Bump { tau: f64 },
    /// Constant-valued stub; only meaningful in tests and controls.
    Constant { value: f64 },
}

/// An evaluable cutoff `χ: [0,1] → [0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    shape: Shape,
    gevrey_order_s: f64,
}

/// Builds `χ(x) = f(x/τ) f((1-x)/τ)` for `τ ∈ (0, 1/2]`.
pub fn make_cutoff(tau: f64) -> Result<CutoffFunction> {
    if !(tau > 0.0 && tau <= 0.5) {
        return invalid(format!("tightness tau must lie in (0, 1/2], got {tau}"));
    }
    Ok(CutoffFunction { shape: Shape::Bump { tau }, gevrey_order_s: 2.0 })
}

impl CutoffFunction {
    /// Constant stub `χ ≡ value`. Not compactly supported in (0,1); used for
    /// controls such as the unitary full-alphabet map and the zero map.
    pub fn constant(value: f64) -> Self {
        Self { shape: Shape::Constant { value: value.clamp(0.0, 1.0) }, gevrey_order_s: 1.0 }
    }

    pub fn tau(&self) -> Option<f64> {
        match self.shape {
            Shape::Bump { tau } => Some(tau),
            Shape::Constant { .. } => None,
        }
    }

    pub fn is_stub(&self) -> bool {
        matches!(self.shape, Shape::Constant { .. })
    }

    /// Nominal Gevrey order (2 for the bump construction).
    pub fn gevrey_order(&self) -> f64 {
        self.gevrey_order_s
    }

    pub fn normalization_c0(&self) -> f64 {
        bump_mass()
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Constant { value } => value,
            Shape::Bump { tau } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    bump_antiderivative(x / tau) * bump_antiderivative((1.0 - x) / tau)
                }
            }
        }
    }

    /// `d(supp χ, 0)`: the analytic left edge `τ · 0.01/1.02` of the support.
    /// For the constant stubs: 0 if nonzero, 1/2 (the largest circle distance)
    /// if identically zero.
    pub fn support_distance_to_zero(&self) -> f64 {
        match self.shape {
            Shape::Bump { tau } => tau * SHIFT / STRETCH,
            Shape::Constant { value: 0.0 } => 0.5,
            Shape::Constant { .. } => 0.0,
        }
    }

    /// `|χ̂(ξ)|` with `χ̂(ξ) = ∫ exp(-2πixξ) χ(x) dx`.
    ///
    /// By the symmetry χ(x) = χ(1-x), `|χ̂(ξ)| = |2∫_0^{1/2} cos(2π(x-½)ξ) χ(x) dx|`;
    /// the plateau part is integrated in closed form and only the ramp
    /// `[edge, τ]` by quadrature.
    pub fn fourier_abs(&self, xi: f64) -> f64 {
        match self.shape {
            Shape::Constant { value } => {
                if xi == 0.0 {
                    value
                } else {
                    (value * (PI * xi).sin() / (PI * xi)).abs()
                }
            }
            Shape::Bump { tau } => {
                let w = 2.0 * PI * xi;
                let plateau = if xi == 0.0 { 0.5 - tau } else { (w * (0.5 - tau)).sin() / w };
                let edge = self.support_distance_to_zero();
                let ramp = quad::integrate(|x| (w * (x - 0.5)).cos() * self.eval(x), edge, tau, 1e-15);
                (2.0 * (plateau + ramp)).abs()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `min_n C_n x^{-n}` for n = 0..=RAPID_ORDERS.
    SmoothRapid,
    /// `C exp(-c x^{1/s})`.
    Gevrey,
}

const RAPID_ORDERS: usize = 8;

/// A positive, nonincreasing majorant on (0, ∞).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub kind: EnvelopeKind,
    /// Gevrey prefactor C.
    pub scale: f64,
    /// Gevrey rate c.
    pub rate: f64,
    /// Gevrey order s.
    pub order: f64,
    /// `C_n`, n = 0.. (smooth-rapid kind only).
    pub rapid_constants: Vec<f64>,
}

impl DecayEnvelope {
    pub fn gevrey(scale: f64, rate: f64, order: f64) -> Self {
        Self { kind: EnvelopeKind::Gevrey, scale, rate, order, rapid_constants: Vec::new() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.kind {
            EnvelopeKind::Gevrey => self.scale * (-self.rate * x.powf(1.0 / self.order)).exp(),
            EnvelopeKind::SmoothRapid => self
                .rapid_constants
                .iter()
                .enumerate()
                .map(|(n, &c)| if n == 0 { c } else { c * x.powi(-(n as i32)) })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `∫_x^∞ envelope`.
    pub fn tail_integral(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.kind {
            EnvelopeKind::Gevrey => {
                if self.scale == 0.0 {
                    return 0.0;
                }
                // y = u^s turns the integrand into C s u^{s-1} e^{-cu}.
                let s = self.order;
                let u0 = x.powf(1.0 / s);
                let f = |u: f64| self.scale * s * u.powf(s - 1.0) * (-self.rate * u).exp();
                quad::integrate(f, u0, u0 + 800.0 / self.rate, 1e-14)
            }
            EnvelopeKind::SmoothRapid => self
                .rapid_constants
                .iter()
                .enumerate()
                .skip(2)
                .map(|(n, &c)| c * x.powi(1 - n as i32) / (n - 1) as f64)
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn dominates(&self, samples: &[(f64, f64)]) -> bool {
        samples.iter().all(|&(x, y)| y <= self.eval(x))
    }
}

/// Sampling and safety parameters for envelope fits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    /// Upper end Ξ of the sampled range [1, Ξ].
    pub xi_max: f64,
    pub spacing: f64,
    /// Multiplicative headroom applied to the fitted prefactor(s), covering
    /// oscillation peaks that fall between samples.
    pub margin: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self { xi_max: 1000.0, spacing: 0.1, margin: 1.25 }
    }
}

/// Fits a majorant of the given kind to positive samples `(x, y)`.
///
/// Gevrey: the rate c comes from a least-squares line through
/// `log sup_{x' ≥ x} y(x')` against `x^{1/s}` (clamped at 0), and C is then
/// the smallest prefactor dominating every sample, times `margin`.
pub fn fit_majorant(samples: &[(f64, f64)], kind: EnvelopeKind, order: f64, margin: f64) -> Result<DecayEnvelope> {
    if samples.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0) {
        return Err(Error::EnvelopeFit("samples must be finite and nonnegative".into()));
    }
    if samples.iter().all(|&(_, y)| y == 0.0) {
        return Ok(match kind {
            EnvelopeKind::Gevrey => DecayEnvelope::gevrey(0.0, 0.0, order),
            EnvelopeKind::SmoothRapid => DecayEnvelope {
                kind,
                scale: 0.0,
                rate: 0.0,
                order,
                rapid_constants: vec![0.0; RAPID_ORDERS + 1],
            },
        });
    }
    match kind {
        EnvelopeKind::Gevrey => {
            let mut sorted: Vec<(f64, f64)> = samples.to_vec();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut hull = Vec::with_capacity(sorted.len());
            let mut running = 0.0f64;
            for &(x, y) in sorted.iter().rev() {
                running = running.max(y);
                if running > 0.0 {
                    hull.push((x.powf(1.0 / order), running.ln()));
                }
            }
            let rate = if hull.len() >= 2 {
                let n = hull.len() as f64;
                let mx = hull.iter().map(|p| p.0).sum::<f64>() / n;
                let my = hull.iter().map(|p| p.1).sum::<f64>() / n;
                let sxx: f64 = hull.iter().map(|p| (p.0 - mx).powi(2)).sum();
                let sxy: f64 = hull.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                if sxx > 0.0 { (-sxy / sxx).max(0.0) } else { 0.0 }
            } else {
                0.0
            };
            let scale = samples
                .iter()
                .map(|&(x, y)| y * (rate * x.powf(1.0 / order)).exp())
                .fold(0.0, f64::max);
            if !scale.is_finite() {
                return Err(Error::EnvelopeFit(format!("prefactor overflow at rate {rate}")));
            }
            Ok(DecayEnvelope::gevrey(scale * margin, rate, order))
        }
        EnvelopeKind::SmoothRapid => {
            let constants: Vec<f64> = (0..=RAPID_ORDERS)
                .map(|n| {
                    samples.iter().map(|&(x, y)| y * x.powi(n as i32)).fold(0.0, f64::max) * margin
                })
                .collect();
            if constants.iter().any(|c| !c.is_finite()) {
                return Err(Error::EnvelopeFit("rapid-decay constant overflow".into()));
            }
            Ok(DecayEnvelope { kind, scale: constants[0], rate: 0.0, order, rapid_constants: constants })
        }
    }
}

/// Samples `|χ̂(ξ)|` on `ξ ∈ [1, Ξ]`.
pub fn sample_fourier_abs(chi: &CutoffFunction, opts: &EnvelopeOptions) -> Vec<(f64, f64)> {
    let count = ((opts.xi_max - 1.0) / opts.spacing).floor() as usize + 1;
    (0..count)
        .map(|i| {
            let xi = 1.0 + i as f64 * opts.spacing;
            (xi, chi.fourier_abs(xi))
        })
        .collect()
}

/// Fits a decay envelope for `|χ̂|` with default sampling options.
pub fn estimate_decay_envelope(chi: &CutoffFunction, kind: EnvelopeKind) -> Result<DecayEnvelope> {
    estimate_decay_envelope_with(chi, kind, &EnvelopeOptions::default())
}

pub fn estimate_decay_envelope_with(
    chi: &CutoffFunction,
    kind: EnvelopeKind,
    opts: &EnvelopeOptions,
) -> Result<DecayEnvelope> {
    let samples = sample_fourier_abs(chi, opts);
    fit_majorant(&samples, kind, chi.gevrey_order().max(1.0), opts.margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivative_endpoints() {
        assert_eq!(bump_antiderivative(0.0), 0.0);
        assert_eq!(bump_antiderivative(SHIFT / STRETCH), 0.0);
        assert_eq!(bump_antiderivative(1.0), 1.0);
        assert_eq!(bump_antiderivative(1.01 / 1.02 + 1e-12), 1.0);
    }

    #[test]
    fn table_agrees_with_quadrature() {
        for &x in &[0.02, 0.1, 0.3, 0.5, 0.77, 0.95] {
            let a = bump_antiderivative(x);
            let b = bump_antiderivative_quadrature(x);
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_tau() {
        for tau in [0.0, -0.1, 0.51, f64::NAN] {
            assert!(make_cutoff(tau).is_err());
        }
        assert!(make_cutoff(0.5).is_ok());
    }

    #[test]
    fn support_edge_scales_with_tau() {
        let a = make_cutoff(0.05).unwrap().support_distance_to_zero();
        let b = make_cutoff(0.1).unwrap().support_distance_to_zero();
        assert!((a - 0.05 * 0.01 / 1.02).abs() < 1e-18);
        assert!((b - 2.0 * a).abs() < 1e-18);
        assert!(a < 0.05);
    }

    #[test]
    fn zero_stub_has_zero_envelope() {
        let env = estimate_decay_envelope(&CutoffFunction::constant(0.0), EnvelopeKind::Gevrey).unwrap();
        assert_eq!(env.scale, 0.0);
    }

    #[test]
    fn rapid_envelope_is_nonincreasing() {
        let samples: Vec<(f64, f64)> = (1..200).map(|i| (i as f64, 1.0 / (i as f64).powi(3))).collect();
        let env = fit_majorant(&samples, EnvelopeKind::SmoothRapid, 2.0, 1.0).unwrap();
        assert!(env.dominates(&samples));
        let mut prev = f64::INFINITY;
        for i in 1..500 {
            let v = env.eval(i as f64 * 0.5);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn fit_rejects_nonfinite_samples() {
        assert!(fit_majorant(&[(1.0, f64::NAN)], EnvelopeKind::Gevrey, 2.0, 1.0).is_err());
    }
}
