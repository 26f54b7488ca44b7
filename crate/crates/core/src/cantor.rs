//! Expanding map, fattened Cantor sets and their Fourier localizers, and the
//! gap schedules that feed long-time propagation.
//!
//! Sets live on the circle `[0,1)` with 0 and 1 identified. An [`Arc`] is a
//! closed arc `[lo, lo + len]` taken mod 1 with `lo ∈ [0,1)`, so an arc may
//! cross 0.

use serde::{Deserialize, Serialize};

use crate::baker::BakerSpec;
use crate::cutoff::{CutoffFunction, DecayEnvelope};
use crate::dft::{fourier_multiplier, GridFunction};
use crate::error::{invalid, Result};
use crate::matrix::ComplexMatrix;

/// Slack for closed-interval membership of grid points whose exact position
/// sits on an endpoint but whose floating-point image is off by an ulp.
const BOUNDARY_EPS: f64 = 1e-12;
const MAX_INTERVALS: usize = 10_000_000;

/// `Φ(x) = Mx - a` on each open strip `(a/M, (a+1)/M)`, `a ∈ 𝒜`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandingMap {
    base: usize,
    alphabet: Vec<usize>,
}

/// Closed interval `[lo, hi]` on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - BOUNDARY_EPS && x <= self.hi + BOUNDARY_EPS
    }
}

impl ExpandingMap {
    pub fn new(base: usize, alphabet: &[usize]) -> Result<Self> {
        if base < 2 {
            return invalid(format!("base must be at least 2, got {base}"));
        }
        if alphabet.is_empty() || alphabet.windows(2).any(|w| w[0] >= w[1]) || alphabet.iter().any(|&a| a >= base) {
            return invalid(format!("alphabet {alphabet:?} must be nonempty, strictly increasing and below {base}"));
        }
        Ok(Self { base, alphabet: alphabet.to_vec() })
    }

    pub fn from_spec(spec: &BakerSpec) -> Self {
        Self { base: spec.base(), alphabet: spec.alphabet().to_vec() }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn alphabet(&self) -> &[usize] {
        &self.alphabet
    }

    pub fn delta(&self) -> f64 {
        (self.alphabet.len() as f64).ln() / (self.base as f64).ln()
    }

    /// `Φ(x)`, or `None` if x is outside the (open) domain.
    pub fn apply(&self, x: f64) -> Option<f64> {
        let y = self.base as f64 * x;
        let a = y.floor();
        if a < 0.0 || y == a {
            return None;
        }
        let a = a as usize;
        self.alphabet.binary_search(&a).ok().map(|_| y - a as f64)
    }

    /// `Φ^{-j}([0,1])` as `|𝒜|^j` closed intervals of length `M^{-j}`, in
    /// increasing order.
    pub fn preimage_intervals(&self, j: usize) -> Result<Vec<Interval>> {
        let count = (self.alphabet.len() as f64).powi(j as i32);
        if count > MAX_INTERVALS as f64 {
            return invalid(format!("|A|^{j} = {count:.3e} intervals exceeds the limit of {MAX_INTERVALS}"));
        }
        let m = self.base as f64;
        let len = m.powi(-(j as i32));
        // Words are enumerated most-significant letter first; the left
        // endpoint Σ a_i M^{-i} is accumulated by Horner from the last letter.
        let mut out = Vec::with_capacity(count as usize);
        let mut word = vec![0usize; j];
        loop {
            let lo = word.iter().rev().fold(0.0, |acc, &i| (acc + self.alphabet[i] as f64) / m);
            out.push(Interval { lo, hi: lo + len });
            let mut pos = j;
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                word[pos] += 1;
                if word[pos] < self.alphabet.len() {
                    break;
                }
                word[pos] = 0;
            }
        }
    }
}

/// Closed arc `{lo + t mod 1 : 0 ≤ t ≤ len}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: f64,
    pub len: f64,
}

impl Arc {
    pub fn contains(&self, x: f64) -> bool {
        let t = (x - self.lo).rem_euclid(1.0);
        t <= self.len + BOUNDARY_EPS || t >= 1.0 - BOUNDARY_EPS
    }

    pub fn crosses_zero(&self) -> bool {
        self.lo + self.len > 1.0
    }
}

/// `X_j = Φ^{-j}([0,1]) + [-a_j, a_j]` mod 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FattenedCantorSet {
    pub level: usize,
    pub width: f64,
    arcs: Vec<Arc>,
    full: bool,
}

impl FattenedCantorSet {
    pub fn build(map: &ExpandingMap, level: usize, width: f64) -> Result<Self> {
        let intervals = map.preimage_intervals(level)?;
        let mut set = fatten(&intervals, width)?;
        set.level = level;
        Ok(set)
    }

    pub fn full_circle(&self) -> bool {
        self.full
    }

    /// Disjoint arcs sorted by start; empty when the set is the full circle.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// The set cut at 0 into closed intervals inside `[0,1]`.
    pub fn intervals_in_unit(&self) -> Vec<Interval> {
        if self.full {
            return vec![Interval { lo: 0.0, hi: 1.0 }];
        }
        let mut out = Vec::new();
        for arc in &self.arcs {
            let hi = arc.lo + arc.len;
            if hi > 1.0 {
                out.push(Interval { lo: 0.0, hi: hi - 1.0 });
                out.push(Interval { lo: arc.lo, hi: 1.0 });
            } else {
                out.push(Interval { lo: arc.lo, hi });
            }
        }
        out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        out
    }

    pub fn measure(&self) -> f64 {
        if self.full {
            1.0
        } else {
            self.arcs.iter().map(|a| a.len).sum()
        }
    }

    /// Closed membership, x taken mod 1.
    pub fn contains(&self, x: f64) -> bool {
        self.full || self.arcs.iter().any(|a| a.contains(x))
    }

    /// `1_X` sampled at `j/N`.
    pub fn indicator(&self, n: usize) -> GridFunction {
        GridFunction::indicator(n, |j| self.contains(j as f64 / n as f64))
    }

    pub fn grid_count(&self, n: usize) -> usize {
        (0..n).filter(|&j| self.contains(j as f64 / n as f64)).count()
    }

    /// Circle distance from x to the set (0 inside).
    pub fn distance(&self, x: f64) -> f64 {
        if self.contains(x) {
            return 0.0;
        }
        self.arcs
            .iter()
            .map(|a| {
                let to_lo = crate::dft::circle_distance(x, a.lo);
                let to_hi = crate::dft::circle_distance(x, a.lo + a.len);
                to_lo.min(to_hi)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Dilates closed intervals by `width` on both sides and merges them into
/// disjoint arcs mod 1 (touching arcs merge).
pub fn fatten(intervals: &[Interval], width: f64) -> Result<FattenedCantorSet> {
    if !(width >= 0.0) || !width.is_finite() {
        return invalid(format!("fattening width must be finite and nonnegative, got {width}"));
    }
    let mut raw: Vec<Arc> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        let len = iv.len() + 2.0 * width;
        if len >= 1.0 {
            return Ok(FattenedCantorSet { level: 0, width, arcs: Vec::new(), full: true });
        }
        raw.push(Arc { lo: (iv.lo - width).rem_euclid(1.0), len });
    }
    raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut merged: Vec<Arc> = Vec::with_capacity(raw.len());
    for arc in raw {
        match merged.last_mut() {
            Some(last) if arc.lo <= last.lo + last.len => {
                last.len = last.len.max(arc.lo + arc.len - last.lo);
            }
            _ => merged.push(arc),
        }
    }
    // The last arc may run past 1 and swallow arcs at the start.
    while merged.len() > 1 {
        let last = *merged.last().unwrap();
        let first = merged[0];
        if last.lo + last.len < 1.0 + first.lo {
            break;
        }
        let end = (last.lo + last.len).max(1.0 + first.lo + first.len);
        merged.remove(0);
        let l = merged.last_mut().unwrap();
        l.len = end - l.lo;
    }
    let full = merged.iter().any(|a| a.len >= 1.0);
    if full {
        merged.clear();
    }
    Ok(FattenedCantorSet { level: 0, width, arcs: merged, full })
}

/// `A_j = (1_{X_j})_N^F`, a Fourier-side orthogonal projection of rank
/// `#{j : j/N ∈ X_j}`.
pub fn localizer(set: &FattenedCantorSet, n: usize) -> ComplexMatrix {
    fourier_multiplier(&set.indicator(n))
}

/// `2 M^{ℓδ} [N/M^ℓ + 2 Σ_{k=1}^ℓ d_k/M^{ℓ-k}]`, with `M^{ℓδ} = |𝒜|^ℓ`.
pub fn rank_bound(base: usize, alphabet_len: usize, n: usize, d: &[f64]) -> f64 {
    let ell = d.len() as i32;
    let m = base as f64;
    let tail: f64 = d.iter().enumerate().map(|(i, dk)| dk / m.powi(ell - (i as i32 + 1))).sum();
    2.0 * (alphabet_len as f64).powi(ell) * (n as f64 / m.powi(ell) + 2.0 * tail)
}

/// Largest ℓ with `M^ℓ ≤ N`.
pub fn floor_log(n: usize, base: usize) -> usize {
    let mut ell = 0;
    let mut p: u128 = base as u128;
    while p <= n as u128 {
        ell += 1;
        p *= base as u128;
    }
    ell
}

/// Smallest ℓ ≥ 0 with `M^ℓ ≥ x` (x > 0); exact powers are recognised up
/// to a relative 1e-12.
pub fn ceil_log(x: f64, base: usize) -> usize {
    let mut ell = 0;
    let mut p = 1.0f64;
    while p < x * (1.0 - 1e-12) {
        ell += 1;
        p *= base as f64;
    }
    ell
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Smooth,
    Gevrey,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleParams {
    /// `d_{ℓ-j} = L·(M/1.5)^j`; n is the exponent from `1.5ⁿ/M^{n-ν} < 1/2`.
    Smooth { l: f64, n: u32, nu: f64 },
    /// `d_{ℓ-j}^{1/s} = ((ν ln M + μ)/c)(j+1)`.
    Gevrey { nu: f64, mu: f64, c: f64, s: f64 },
}

/// Gap distances `d_1..d_ℓ` with widths `a_0..a_ℓ` (`a_0 = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSchedule {
    pub ell: usize,
    pub n: usize,
    pub base: usize,
    /// `d[k-1] = d_k`.
    pub d: Vec<f64>,
    /// `a[j] = a_j = (1/N) Σ_{k≤j} d_k / M^{j-k}`.
    pub a: Vec<f64>,
    pub kind: ScheduleKind,
    pub params: ScheduleParams,
    /// Every `d_j/N ≤ (2/M)·d(supp χ, 0)`.
    pub valid: bool,
    pub support_distance: f64,
}

impl GapSchedule {
    /// Builds widths and the validity flag from explicit gaps.
    pub fn from_gaps(
        n: usize,
        base: usize,
        d: Vec<f64>,
        kind: ScheduleKind,
        params: ScheduleParams,
        support_distance: f64,
    ) -> Result<Self> {
        if n == 0 || base < 2 {
            return invalid("schedule needs N ≥ 1 and M ≥ 2");
        }
        if let Some(bad) = d.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return invalid(format!("gap distances must be positive and finite, got {bad}"));
        }
        let m = base as f64;
        let nf = n as f64;
        let mut a = vec![0.0; d.len() + 1];
        for j in 1..=d.len() {
            a[j] = a[j - 1] / m + d[j - 1] / nf;
        }
        let limit = 2.0 / m * support_distance;
        let valid = d.iter().all(|dj| dj / nf <= limit);
        Ok(Self { ell: d.len(), n, base, d, a, kind, params, valid, support_distance })
    }

    /// `d_j` recomputed from the widths, `N(a_j - a_{j-1}/M)`.
    pub fn gaps_from_widths(&self) -> Vec<f64> {
        let m = self.base as f64;
        (1..=self.ell).map(|j| self.n as f64 * (self.a[j] - self.a[j - 1] / m)).collect()
    }

    /// `X_0, ..., X_ℓ`.
    pub fn cantor_sets(&self, map: &ExpandingMap) -> Result<Vec<FattenedCantorSet>> {
        (0..=self.ell).map(|j| FattenedCantorSet::build(map, j, self.a[j])).collect()
    }

    pub fn rank_bound(&self, alphabet_len: usize) -> f64 {
        rank_bound(self.base, alphabet_len, self.n, &self.d)
    }

    /// `Σ_j |λ|^{-j-1} g(d_{ℓ-j})` for an envelope g.
    pub fn remainder_bound(&self, lambda_abs: f64, envelope: &DecayEnvelope) -> f64 {
        (0..self.ell).map(|j| lambda_abs.powi(-(j as i32) - 1) * envelope.eval(self.d[self.ell - j - 1])).sum()
    }
}

/// Smallest n with `1.5ⁿ / M^{n-ν} < 1/2`, i.e. `n ln(M/1.5) > ν ln M + ln 2`.
pub fn smooth_exponent(base: usize, nu: f64) -> Result<u32> {
    let m = base as f64;
    let rate = (m / 1.5).ln();
    if rate <= 0.0 {
        return invalid(format!("no n satisfies the smooth-schedule condition for M = {base}"));
    }
    let need = nu * m.ln() + 2f64.ln();
    let mut n = (need / rate).floor().max(0.0) as u32;
    while (n as f64) * rate <= need {
        n += 1;
    }
    Ok(n)
}

/// `d_{ℓ-j} = L·M^j/1.5^j`, `ℓ = ⌊log N / log M⌋`.
pub fn smooth_schedule(n: usize, base: usize, nu: f64, chi: &CutoffFunction, l: f64) -> Result<GapSchedule> {
    if !(nu > 0.0) {
        return invalid(format!("nu must be positive, got {nu}"));
    }
    if !(l > 0.0) || !l.is_finite() {
        return invalid(format!("L must be positive, got {l}"));
    }
    let ell = floor_log(n, base);
    if ell == 0 {
        return invalid(format!("N = {n} < M = {base} leaves no propagation time"));
    }
    let ratio = base as f64 / 1.5;
    let d: Vec<f64> = (1..=ell).map(|k| l * ratio.powi((ell - k) as i32)).collect();
    let params = ScheduleParams::Smooth { l, n: smooth_exponent(base, nu)?, nu };
    GapSchedule::from_gaps(n, base, d, ScheduleKind::Smooth, params, chi.support_distance_to_zero())
}

/// Gevrey gaps `d_{ℓ-j} = [((ν ln M + μ)/c)(j+1)]^s` with
/// `ℓ = ⌈log(N/ν^s)/log M⌉`.
pub fn gevrey_schedule(
    n: usize,
    base: usize,
    nu: f64,
    s: f64,
    mu: f64,
    c: f64,
    support_distance: f64,
) -> Result<GapSchedule> {
    if !(s >= 1.0) || !(c > 0.0) || !(mu >= 0.0) {
        return invalid(format!("need s ≥ 1, c > 0, mu ≥ 0; got s={s}, c={c}, mu={mu}"));
    }
    let nus = nu.powf(s);
    if !(nus >= 1.0) || nus >= n as f64 {
        return invalid(format!("need 1 ≤ nu^s < N, got nu^s = {nus}, N = {n}"));
    }
    let ell = ceil_log(n as f64 / nus, base);
    let step = (nu * (base as f64).ln() + mu) / c;
    let d: Vec<f64> = (1..=ell).map(|k| (step * (ell - k + 1) as f64).powf(s)).collect();
    GapSchedule::from_gaps(
        n,
        base,
        d,
        ScheduleKind::Gevrey,
        ScheduleParams::Gevrey { nu, mu, c, s },
        support_distance,
    )
}

/// Default μ for a fitted envelope `C e^{-c x^{1/s}}`: the smallest μ with
/// `C Σ_{j≥0} e^{-μ(j+1)} ≤ 1/2`.
pub fn default_mu(envelope: &DecayEnvelope) -> f64 {
    (1.0 + 2.0 * envelope.scale).ln()
}
