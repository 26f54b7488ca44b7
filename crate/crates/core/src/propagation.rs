//! Numerical checks of the propagation machinery: nonstationary phase sums,
//! one-step norms, the approximate inverse identity and random propagation.
//!
//! Identity conventions. With `Q_j = I - A_j` and
//! `T_j = Q_ℓ B Q_{ℓ-1} B ⋯ Q_{ℓ-j} B A_{ℓ-j-1}` (j = 0..ℓ-1), telescoping
//! `Q_ℓ B^ℓ` over the insertions `I = A_i + Q_i` (and `A_0 = I`) gives
//!
//! ```text
//! I = Z (B - λ) + R + A_ℓ
//! R = Σ_j λ^{-j-1} T_j
//! Z = -Σ_{k<ℓ} λ^{-1-k} Q_ℓ B^k + λ^{-ℓ} Σ_j T_j P_{ℓ-j-1}
//! P_m = Σ_{k<m} λ^k B^{m-1-k}
//! ```
//!
//! `T_j` ends in the small factor `Q_{ℓ-j} B A_{ℓ-j-1}` and every other factor
//! has norm at most 1, which is what the remainder bound uses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baker::{build_dense, BakerOperator, BakerSpec};
use crate::cantor::{floor_log, ExpandingMap, FattenedCantorSet, GapSchedule, ScheduleKind};
use crate::cutoff::{CutoffFunction, DecayEnvelope};
use crate::dft::{apply_multiplier, dft, idft, GridFunction};
use crate::error::{invalid, Result};
use crate::matrix::{ComplexMatrix, ComplexVector, C64, ONE};
use crate::spectral::{operator_norm, LuDecomposition, OperatorNormEstimate};

/// `Σ_{m<N} exp(2πiam/N) χ(m/N)`.
pub fn nonstationary_sum(chi: &CutoffFunction, n: usize, a: usize) -> Result<C64> {
    if a >= n {
        return Err(crate::Error::IndexOutOfRange { index: a, bound: n });
    }
    // Reduce am mod N in integers so the phase stays exact for large N.
    let sum = (0..n)
        .map(|m| {
            let phase = ((a as u128 * m as u128) % n as u128) as f64 / n as f64;
            C64::from_polar(chi.eval(m as f64 / n as f64), 2.0 * std::f64::consts::PI * phase)
        })
        .sum();
    Ok(sum)
}

fn check_unit_valued(spec: &BakerSpec, f: &GridFunction) -> Result<()> {
    if f.len() != spec.n() {
        return Err(crate::Error::DimensionMismatch { expected: spec.n(), actual: f.len() });
    }
    if !f.is_unit_valued() {
        return invalid("cutoff functions must take values in [0,1]");
    }
    Ok(())
}

/// `‖φ_N B_N ψ_N‖`.
pub fn one_step_norm(spec: &BakerSpec, phi: &GridFunction, psi: &GridFunction) -> Result<OperatorNormEstimate> {
    check_unit_valued(spec, phi)?;
    check_unit_valued(spec, psi)?;
    let op = BakerOperator::new(spec.clone());
    let (p, q) = (phi.values(), psi.values());
    Ok(operator_norm(
        |u| {
            let v: Vec<C64> = u.iter().zip(q).map(|(x, w)| x * w).collect();
            op.apply(&v).into_iter().zip(p).map(|(x, w)| x * w).collect()
        },
        |u| {
            let v: Vec<C64> = u.iter().zip(p).map(|(x, w)| x * w).collect();
            op.apply_adjoint(&v).into_iter().zip(q).map(|(x, w)| x * w).collect()
        },
        spec.n(),
    ))
}

/// `‖ψ_N^F B_N φ_N^F‖`, the Fourier-side counterpart of [`one_step_norm`].
pub fn fourier_one_step_norm(
    spec: &BakerSpec,
    phi: &GridFunction,
    psi: &GridFunction,
) -> Result<OperatorNormEstimate> {
    check_unit_valued(spec, phi)?;
    check_unit_valued(spec, psi)?;
    let op = BakerOperator::new(spec.clone());
    Ok(sandwich_norm(&op, psi, phi))
}

/// `‖left^F B right^F‖` for Fourier multipliers.
fn sandwich_norm(op: &BakerOperator, left: &GridFunction, right: &GridFunction) -> OperatorNormEstimate {
    operator_norm(
        |u| apply_multiplier(left, &op.apply(&apply_multiplier(right, u))),
        |u| apply_multiplier(right, &op.apply_adjoint(&apply_multiplier(left, u))),
        op.n(),
    )
}

/// Schur majorant for `‖φ_N B_N ψ_N‖` when the gap condition holds with
/// `x = Nr`, given `|χ̂| ≤ envelope`.
///
/// Poisson summation bounds each kernel entry by `M^{-1/2} Σ_k env(|kK - t|)`
/// with `|kK - t| ≥ x`. A row sees `t` on a unit lattice once per letter, a
/// column sees it on a `1/M` lattice, and each lattice sum is bounded by its
/// first term plus the tail integral.
pub fn one_step_envelope(envelope: &DecayEnvelope, base: usize, alphabet_len: usize, x: f64) -> f64 {
    let lattice = |h: f64| 2.0 * (envelope.eval(x) + envelope.tail_integral(x) / h);
    let m = base as f64;
    let row = alphabet_len as f64 * lattice(1.0) / m.sqrt();
    let column = lattice(1.0 / m) / m.sqrt();
    (row * column).sqrt()
}

/// One consecutive pair of a schedule: `‖(1 - A_j) B A_{j-1}‖` against the
/// envelope at `d_j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCheck {
    pub j: usize,
    pub d_j: f64,
    pub norm: f64,
    pub envelope: f64,
    pub dominated: bool,
}

pub fn localization_norms(
    spec: &BakerSpec,
    schedule: &GapSchedule,
    envelope: &DecayEnvelope,
) -> Result<Vec<LocalizationCheck>> {
    check_schedule(spec, schedule)?;
    let map = ExpandingMap::from_spec(spec);
    let sets = schedule.cantor_sets(&map)?;
    let op = BakerOperator::new(spec.clone());
    let n = spec.n();
    Ok((1..=schedule.ell)
        .map(|j| {
            let q = sets[j].indicator(n).complement();
            let a = sets[j - 1].indicator(n);
            let norm = sandwich_norm(&op, &q, &a).value;
            let d_j = schedule.d[j - 1];
            let env = envelope.eval(d_j);
            LocalizationCheck { j, d_j, norm, envelope: env, dominated: norm <= env }
        })
        .collect())
}

/// The pieces of `I = Z(B - λ) + R + A`.
#[derive(Clone, Debug)]
pub struct IdentityParts {
    pub z: ComplexMatrix,
    pub r: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub lambda: C64,
    pub schedule: GapSchedule,
    /// `rank A_ℓ` = number of grid points in `X_ℓ`.
    pub rank_a: usize,
}

fn check_schedule(spec: &BakerSpec, schedule: &GapSchedule) -> Result<()> {
    if schedule.n != spec.n() || schedule.base != spec.base() {
        return invalid(format!(
            "schedule built for N={}, M={} used with N={}, M={}",
            schedule.n,
            schedule.base,
            spec.n(),
            spec.base()
        ));
    }
    if schedule.ell == 0 {
        return invalid("empty schedule (ℓ = 0)");
    }
    if schedule.ell > floor_log(spec.n(), spec.base()) {
        return invalid(format!("propagation time ℓ = {} exceeds log N / log M", schedule.ell));
    }
    Ok(())
}

fn range_basis(indicator: &GridFunction) -> Vec<Vec<C64>> {
    let n = indicator.len();
    indicator
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, _)| idft(&ComplexVector::basis(n, k)).into_vec())
        .collect()
}

/// Assembles Z, R and A for a schedule and spectral parameter λ.
///
/// The validity flag of the schedule is carried along, not enforced: the
/// identity is algebraic and holds for any positive gaps.
pub fn assemble_identity(spec: &BakerSpec, schedule: &GapSchedule, lambda: C64) -> Result<IdentityParts> {
    if !(lambda.norm() > 0.0) || !lambda.is_finite() {
        return invalid(format!("lambda must be finite and nonzero, got {lambda}"));
    }
    check_schedule(spec, schedule)?;
    let n = spec.n();
    let ell = schedule.ell;
    let map = ExpandingMap::from_spec(spec);
    let sets: Vec<FattenedCantorSet> = schedule.cantor_sets(&map)?;
    let grids: Vec<GridFunction> = sets.iter().map(|s| s.indicator(n)).collect();
    let q_grids: Vec<GridFunction> = grids.iter().map(|g| g.complement()).collect();
    let op = build_dense(spec);
    let b = op.dense().expect("dense operator").clone();
    let identity = ComplexMatrix::identity(n);
    let a_ell = crate::dft::fourier_multiplier(&grids[ell]);
    let q_ell = &identity - &a_ell;
    let inv = ONE / lambda;

    // T_j through the range basis V of A_{ℓ-j-1}: T_j = (Q_ℓ B ⋯ Q_{ℓ-j} B V) V*.
    let mut t = Vec::with_capacity(ell);
    for j in 0..ell {
        let basis = range_basis(&grids[ell - j - 1]);
        let mut w: Vec<Vec<C64>> = basis.clone();
        for level in ell - j..=ell {
            for col in w.iter_mut() {
                *col = apply_multiplier(&q_grids[level], &b.matvec(col));
            }
        }
        let wm = ComplexMatrix::from_columns(n, &w);
        let vm = ComplexMatrix::from_columns(n, &basis);
        t.push(if basis.is_empty() { ComplexMatrix::zeros(n, n) } else { &wm * &vm.adjoint() });
    }

    let mut r = ComplexMatrix::zeros(n, n);
    for (j, tj) in t.iter().enumerate() {
        r = &r + &tj.scaled(inv.powi(j as i32 + 1));
    }

    // -Σ_{k<ℓ} λ^{-1-k} Q_ℓ B^k
    let mut power = identity.clone();
    let mut series = ComplexMatrix::zeros(n, n);
    for k in 0..ell {
        series = &series + &power.scaled(inv.powi(k as i32 + 1));
        power = &b * &power;
    }
    let mut z = (&q_ell * &series).scaled(C64::new(-1.0, 0.0));

    // λ^{-ℓ} Σ_j T_j P_{ℓ-j-1}, with P_m = B P_{m-1} + λ^{m-1} I.
    let mut p = vec![ComplexMatrix::zeros(n, n)];
    for m in 1..ell {
        let next = &(&b * &p[m - 1]) + &identity.scaled(lambda.powi(m as i32 - 1));
        p.push(next);
    }
    let mut e = ComplexMatrix::zeros(n, n);
    for (j, tj) in t.iter().enumerate() {
        let m = ell - j - 1;
        if m > 0 {
            e = &e + &(tj * &p[m]);
        }
    }
    z = &z + &e.scaled(inv.powi(ell as i32));

    Ok(IdentityParts {
        z,
        r,
        a: a_ell,
        b,
        lambda,
        schedule: schedule.clone(),
        rank_a: grids[ell].support_size(),
    })
}

/// Residual norms of both identity forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub absolute: f64,
    /// `absolute / max(1, ‖Z‖‖B - λ‖, ‖R‖)`.
    pub relative: f64,
}

fn residual_of(total: &ComplexMatrix, scale: f64) -> IdentityResidual {
    let n = total.rows();
    let diff = &ComplexMatrix::identity(n) - total;
    let absolute = diff.operator_norm();
    IdentityResidual { absolute, relative: absolute / scale.max(1.0) }
}

impl IdentityParts {
    fn shifted_b(&self) -> ComplexMatrix {
        self.b.shifted(self.lambda)
    }

    fn scale(&self) -> f64 {
        let zb = self.z.operator_norm() * self.shifted_b().operator_norm();
        zb.max(self.r.operator_norm())
    }

    /// `‖I - Z(B - λ) - R - A‖`.
    pub fn residual(&self) -> IdentityResidual {
        let total = &(&(&self.z * &self.shifted_b()) + &self.r) + &self.a;
        residual_of(&total, self.scale())
    }

    /// `‖I - (Z - λ⁻¹A)(B - λ) - R - λ⁻¹AB‖`.
    pub fn modified_residual(&self) -> IdentityResidual {
        let inv = ONE / self.lambda;
        let z_mod = &self.z - &self.a.scaled(inv);
        let ab = (&self.a * &self.b).scaled(inv);
        let total = &(&(&z_mod * &self.shifted_b()) + &self.r) + &ab;
        residual_of(&total, self.scale())
    }

    pub fn remainder_norm(&self) -> f64 {
        self.r.operator_norm()
    }

    /// `‖λ⁻¹ A B (I - R)⁻¹‖`.
    pub fn forward_back_norm(&self) -> Result<f64> {
        let n = self.b.rows();
        let lu = LuDecomposition::new(&(&ComplexMatrix::identity(n) - &self.r))?;
        let m = &(&self.a * &self.b).scaled(ONE / self.lambda) * &lu.inverse();
        Ok(m.operator_norm())
    }
}

/// Outcome of comparing `‖R‖` with its target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub remainder_norm: f64,
    /// `Σ_j |λ|^{-j-1} envelope(d_{ℓ-j})`.
    pub envelope_bound: f64,
    /// 1/2 for smooth schedules, the envelope bound for Gevrey ones.
    pub target: f64,
    pub pass: bool,
    pub schedule_valid: bool,
}

pub fn remainder_norm_check(parts: &IdentityParts, envelope: &DecayEnvelope) -> RemainderReport {
    let remainder_norm = parts.remainder_norm();
    let envelope_bound = parts.schedule.remainder_bound(parts.lambda.norm(), envelope);
    let target = match parts.schedule.kind {
        ScheduleKind::Smooth => 0.5,
        ScheduleKind::Gevrey => envelope_bound,
    };
    RemainderReport {
        remainder_norm,
        envelope_bound,
        target,
        pass: remainder_norm <= target,
        schedule_valid: parts.schedule.valid,
    }
}

/// Result of doubling L from 1 until `‖R‖ ≤ 1/2`.
#[derive(Clone, Debug)]
pub struct AdaptiveIdentity {
    pub l: f64,
    pub doublings: usize,
    pub parts: IdentityParts,
    pub remainder_norm: f64,
}

const MAX_DOUBLINGS: usize = 40;

pub fn adaptive_smooth_identity(spec: &BakerSpec, nu: f64, lambda: C64) -> Result<AdaptiveIdentity> {
    let mut l = 1.0;
    for doublings in 0..=MAX_DOUBLINGS {
        let schedule = crate::cantor::smooth_schedule(spec.n(), spec.base(), nu, spec.chi(), l)?;
        let parts = assemble_identity(spec, &schedule, lambda)?;
        let remainder_norm = parts.remainder_norm();
        if remainder_norm <= 0.5 {
            return Ok(AdaptiveIdentity { l, doublings, parts, remainder_norm });
        }
        l *= 2.0;
    }
    Err(crate::Error::NoConvergence { matrix_hash: 0, dim: spec.n(), converged: 0, partial: Vec::new() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Normalized complex Gaussian vector from a ChaCha8 stream.
pub fn random_state(n: usize, seed: u64) -> ComplexVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexVector::random_normalized(n, &mut rng)
}

/// Forward: `F_N B^k f`; backward: `(B*)^k f`; k = 1..=steps.
pub fn propagate_random(spec: &BakerSpec, steps: usize, direction: Direction, seed: u64) -> Result<Vec<ComplexVector>> {
    if steps == 0 {
        return invalid("steps must be at least 1");
    }
    let f = random_state(spec.n(), seed);
    Ok(propagate(spec, &f, steps, direction))
}

pub fn propagate(spec: &BakerSpec, f: &ComplexVector, steps: usize, direction: Direction) -> Vec<ComplexVector> {
    let op = BakerOperator::new(spec.clone());
    let mut v = f.as_slice().to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        match direction {
            Direction::Forward => {
                v = op.apply(&v);
                out.push(dft(&ComplexVector(v.clone())));
            }
            Direction::Backward => {
                v = op.apply_adjoint(&v);
                out.push(ComplexVector(v.clone()));
            }
        }
    }
    out
}

/// Fraction of `‖v‖²` carried by grid points `j/N` in `set`; 0 for v = 0.
pub fn mass_concentration(v: &[C64], set: &FattenedCantorSet) -> f64 {
    let n = v.len();
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let inside: f64 = v
        .iter()
        .enumerate()
        .filter(|(j, _)| set.contains(*j as f64 / n as f64))
        .map(|(_, z)| z.norm_sqr())
        .sum();
    inside / total
}

/// `Φ^{-level}([0,1])` fattened by `M^{-level}`: the target region for the
/// concentration statistic.
pub fn concentration_region(spec: &BakerSpec, level: usize) -> Result<FattenedCantorSet> {
    let map = ExpandingMap::from_spec(spec);
    FattenedCantorSet::build(&map, level, (spec.base() as f64).powi(-(level as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::smooth_schedule;
    use crate::matrix::ZERO;

    fn spec(k: usize) -> BakerSpec {
        BakerSpec::with_tau(3, &[0, 2], 0.1, k).unwrap()
    }

    #[test]
    fn nonstationary_sum_basics() {
        let chi = crate::cutoff::make_cutoff(0.1).unwrap();
        let s0 = nonstationary_sum(&chi, 50, 0).unwrap();
        assert!(s0.re > 0.0 && s0.im.abs() < 1e-12);
        let a = nonstationary_sum(&chi, 50, 7).unwrap();
        let b = nonstationary_sum(&chi, 50, 43).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        assert!(nonstationary_sum(&chi, 50, 50).is_err());
    }

    #[test]
    fn identity_small_case() {
        let s = spec(9);
        let sched = smooth_schedule(s.n(), 3, 1.0, s.chi(), 1.0).unwrap();
        let parts = assemble_identity(&s, &sched, C64::new(0.4, 0.0)).unwrap();
        assert!(parts.residual().relative < 1e-10, "{:?}", parts.residual());
        assert!(parts.modified_residual().relative < 1e-10);
    }

    #[test]
    fn empty_schedule_rejected() {
        let s = spec(9);
        let mut sched = smooth_schedule(s.n(), 3, 1.0, s.chi(), 1.0).unwrap();
        sched.ell = 0;
        assert!(assemble_identity(&s, &sched, C64::new(0.4, 0.0)).is_err());
        let sched = smooth_schedule(s.n(), 3, 1.0, s.chi(), 1.0).unwrap();
        assert!(assemble_identity(&s, &sched, ZERO).is_err());
    }

    #[test]
    fn propagation_is_deterministic_and_contracting() {
        let s = spec(9);
        let a = propagate_random(&s, 3, Direction::Forward, 7).unwrap();
        let b = propagate_random(&s, 3, Direction::Forward, 7).unwrap();
        assert_eq!(a, b);
        let norms: Vec<f64> = a.iter().map(|v| v.norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(propagate_random(&s, 0, Direction::Backward, 7).is_err());
    }
}
