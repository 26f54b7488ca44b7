//! The quantum open baker's map `B_N` for a triple (M, 𝒜, χ) and N = K·M.
//!
//! ```text
//! B_N = Σ_{a ∈ 𝒜} F_N* Π_a* χ_K F_K χ_K Π_a,    (Π_a u)(j) = u(j + aK)
//! ```
//!
//! Three evaluation routes are provided and cross-checked in tests: the
//! dense block assembly, the expanded triple-sum kernel, and a matrix-free
//! FFT path.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cutoff::{make_cutoff, CutoffFunction};
use crate::dft::{dft_in_place, idft_in_place};
use crate::error::{invalid, Error, Result};
use crate::matrix::{ComplexMatrix, ComplexVector, C64, ZERO};

/// Wire form of a [`BakerSpec`]: `{"M": int, "alphabet": [int], "tau": float, "K": int}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BakerSpecConfig {
    #[serde(rename = "M")]
    pub base: usize,
    pub alphabet: Vec<usize>,
    pub tau: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

/// The triple (M, 𝒜, χ) together with K; fixes `B_N` at `N = K·M`.
#[derive(Clone, Debug, PartialEq)]
pub struct BakerSpec {
    base: usize,
    alphabet: Vec<usize>,
    chi: CutoffFunction,
    k: usize,
}

impl BakerSpec {
    pub fn new(base: usize, alphabet: &[usize], chi: CutoffFunction, k: usize) -> Result<Self> {
        if base < 2 {
            return invalid(format!("base M must be at least 2, got {base}"));
        }
        if alphabet.is_empty() {
            return invalid("alphabet must be nonempty");
        }
        if alphabet.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("alphabet must be strictly increasing");
        }
        if let Some(&a) = alphabet.iter().find(|&&a| a >= base) {
            return invalid(format!("alphabet letter {a} is not below the base {base}"));
        }
        if k == 0 {
            return invalid("K must be at least 1");
        }
        Ok(Self { base, alphabet: alphabet.to_vec(), chi, k })
    }

    /// Convenience constructor with the standard bump cutoff of tightness τ.
    pub fn with_tau(base: usize, alphabet: &[usize], tau: f64, k: usize) -> Result<Self> {
        Self::new(base, alphabet, make_cutoff(tau)?, k)
    }

    pub fn from_config(cfg: &BakerSpecConfig) -> Result<Self> {
        Self::with_tau(cfg.base, &cfg.alphabet, cfg.tau, cfg.k)
    }

    pub fn config(&self) -> Result<BakerSpecConfig> {
        let tau = self
            .chi
            .tau()
            .ok_or_else(|| Error::InvalidParameter("stub cutoffs have no wire form".into()))?;
        Ok(BakerSpecConfig { base: self.base, alphabet: self.alphabet.clone(), tau, k: self.k })
    }

    /// Same triple at a different K.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.base, &self.alphabet, self.chi, k)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn alphabet(&self) -> &[usize] {
        &self.alphabet
    }

    pub fn chi(&self) -> &CutoffFunction {
        &self.chi
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.k * self.base
    }

    /// `δ = log|𝒜| / log M`.
    pub fn delta(&self) -> f64 {
        (self.alphabet.len() as f64).ln() / (self.base as f64).ln()
    }

    pub fn contains_letter(&self, a: usize) -> bool {
        self.alphabet.binary_search(&a).is_ok()
    }

    /// Indices j with ⌊j/K⌋ ∈ 𝒜; all other columns of `B_N` vanish.
    pub fn kept_indices(&self) -> Vec<usize> {
        self.alphabet.iter().flat_map(|&a| a * self.k..(a + 1) * self.k).collect()
    }

    /// `χ(m/K)` for m = 0..K-1.
    pub fn chi_grid(&self) -> Vec<f64> {
        (0..self.k).map(|m| self.chi.eval(m as f64 / self.k as f64)).collect()
    }

    fn check_len(&self, u: &[C64]) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: u.len() });
        }
        Ok(())
    }
}

/// `Π_a u`: the K entries `u(aK), …, u(aK + K - 1)`.
pub fn project(spec: &BakerSpec, a: usize, u: &[C64]) -> Result<ComplexVector> {
    spec.check_len(u)?;
    if a >= spec.base {
        return Err(Error::IndexOutOfRange { index: a, bound: spec.base });
    }
    let k = spec.k;
    ComplexVector::new(u[a * k..(a + 1) * k].to_vec())
}

fn roots_of_unity(n: usize) -> Vec<C64> {
    (0..n).map(|t| C64::from_polar(1.0, 2.0 * PI * t as f64 / n as f64)).collect()
}

/// Matrix-free `B_N u` through length-K and length-N FFTs.
pub fn apply_fast(spec: &BakerSpec, u: &[C64]) -> Result<ComplexVector> {
    spec.check_len(u)?;
    Ok(ComplexVector::new(apply_fast_with(spec, &spec.chi_grid(), u)).expect("N >= 2"))
}

fn apply_fast_with(spec: &BakerSpec, chi: &[f64], u: &[C64]) -> Vec<C64> {
    let k = spec.k;
    let mut out = vec![ZERO; spec.n()];
    for &a in &spec.alphabet {
        let block = &mut out[a * k..(a + 1) * k];
        for ((b, x), &w) in block.iter_mut().zip(&u[a * k..(a + 1) * k]).zip(chi) {
            *b = x * w;
        }
        dft_in_place(block);
        block.iter_mut().zip(chi).for_each(|(b, &w)| *b *= w);
    }
    idft_in_place(&mut out);
    out
}

/// Matrix-free `B_N* u`.
pub fn adjoint_apply(spec: &BakerSpec, u: &[C64]) -> Result<ComplexVector> {
    spec.check_len(u)?;
    Ok(ComplexVector::new(adjoint_apply_with(spec, &spec.chi_grid(), u)).expect("N >= 2"))
}

fn adjoint_apply_with(spec: &BakerSpec, chi: &[f64], u: &[C64]) -> Vec<C64> {
    let k = spec.k;
    let mut w = u.to_vec();
    dft_in_place(&mut w);
    let mut out = vec![ZERO; spec.n()];
    for &a in &spec.alphabet {
        let block = &mut out[a * k..(a + 1) * k];
        for ((b, x), &c) in block.iter_mut().zip(&w[a * k..(a + 1) * k]).zip(chi) {
            *b = x * c;
        }
        idft_in_place(block);
        block.iter_mut().zip(chi).for_each(|(b, &c)| *b *= c);
    }
    out
}

/// Direct evaluation of the expanded kernel
/// `(√M/N) Σ_a Σ_{m,l} exp[2πi((j - Ml)m/N + ja/M)] χ(m/K) χ(l/K) u(l + aK)`.
///
/// O(N·|𝒜|·K²); intended as an oracle for the fast paths.
pub fn apply_expanded(spec: &BakerSpec, u: &[C64]) -> Result<ComplexVector> {
    spec.check_len(u)?;
    let (n, k, m_base) = (spec.n(), spec.k, spec.base);
    let roots = roots_of_unity(n);
    let chi = spec.chi_grid();
    let prefactor = (m_base as f64).sqrt() / n as f64;
    let ni = n as i64;
    let out = (0..n)
        .map(|j| {
            let mut acc = ZERO;
            for &a in &spec.alphabet {
                for l in 0..k {
                    let weight = chi[l] * u[l + a * k];
                    if weight == ZERO {
                        continue;
                    }
                    let base_idx = (j as i64 - (m_base * l) as i64).rem_euclid(ni);
                    // ja/M = j·a·K/N
                    let shift = ((j * a * k) as i64).rem_euclid(ni);
                    let mut inner = ZERO;
                    for (m, &cm) in chi.iter().enumerate() {
                        if cm == 0.0 {
                            continue;
                        }
                        let idx = (base_idx * m as i64 + shift).rem_euclid(ni) as usize;
                        inner += roots[idx] * cm;
                    }
                    acc += inner * weight;
                }
            }
            acc * prefactor
        })
        .collect();
    ComplexVector::new(out)
}

/// `χ_K F_K χ_K` as a dense K×K matrix.
fn middle_block(spec: &BakerSpec, chi: &[f64]) -> ComplexMatrix {
    let k = spec.k;
    let roots = roots_of_unity(k);
    let s = 1.0 / (k as f64).sqrt();
    ComplexMatrix::from_fn(k, k, |m, l| roots[(k - (m * l) % k) % k] * (s * chi[m] * chi[l]))
}

/// Dense columns `B_N e_c` for the requested column indices, restricted to
/// the requested rows.
fn dense_columns(spec: &BakerSpec, rows: &[usize], cols: &[usize]) -> ComplexMatrix {
    let (n, k) = (spec.n(), spec.k);
    let chi = spec.chi_grid();
    let block = middle_block(spec, &chi);
    let mut out = ComplexMatrix::zeros(rows.len(), cols.len());
    let mut buf = vec![ZERO; n];
    for (jc, &c) in cols.iter().enumerate() {
        let a = c / k;
        if !spec.contains_letter(a) {
            continue;
        }
        let l = c % k;
        buf.iter_mut().for_each(|x| *x = ZERO);
        for m in 0..k {
            buf[a * k + m] = block[(m, l)];
        }
        idft_in_place(&mut buf);
        for (ir, &r) in rows.iter().enumerate() {
            out[(ir, jc)] = buf[r];
        }
    }
    out
}

/// `B_N` with optional dense storage; always applicable matrix-free.
#[derive(Clone, Debug)]
pub struct BakerOperator {
    spec: BakerSpec,
    chi: Vec<f64>,
    dense: Option<ComplexMatrix>,
}

impl BakerOperator {
    /// Matrix-free operator.
    pub fn new(spec: BakerSpec) -> Self {
        let chi = spec.chi_grid();
        Self { spec, chi, dense: None }
    }

    pub fn spec(&self) -> &BakerSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn dense(&self) -> Option<&ComplexMatrix> {
        self.dense.as_ref()
    }

    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        assert_eq!(u.len(), self.n(), "operator dimension mismatch");
        match &self.dense {
            Some(m) => m.matvec(u),
            None => apply_fast_with(&self.spec, &self.chi, u),
        }
    }

    pub fn apply_adjoint(&self, u: &[C64]) -> Vec<C64> {
        assert_eq!(u.len(), self.n(), "operator dimension mismatch");
        match &self.dense {
            Some(m) => m.adjoint_matvec(u),
            None => adjoint_apply_with(&self.spec, &self.chi, u),
        }
    }

    /// Dense matrix, assembling it if it is not stored.
    pub fn to_dense(&self) -> ComplexMatrix {
        match &self.dense {
            Some(m) => m.clone(),
            None => {
                let all: Vec<usize> = (0..self.n()).collect();
                dense_columns(&self.spec, &all, &all)
            }
        }
    }
}

/// Dense N×N assembly from the block formula. K = 1 is allowed but gives the
/// zero operator because χ(0) = 0.
pub fn build_dense(spec: &BakerSpec) -> BakerOperator {
    let mut op = BakerOperator::new(spec.clone());
    op.dense = Some(op.to_dense());
    op
}

/// `B_N` with its structurally zero rows and columns removed.
#[derive(Clone, Debug)]
pub struct TrimmedOperator {
    pub matrix: ComplexMatrix,
    pub kept_indices: Vec<usize>,
}

/// Removes the rows and columns j with ⌊j/K⌋ ∉ 𝒜 from the dense operator.
pub fn trim(op: &BakerOperator) -> Result<TrimmedOperator> {
    let dense = op
        .dense()
        .ok_or_else(|| Error::InvalidParameter("trim requires the dense form".into()))?;
    let kept = op.spec().kept_indices();
    Ok(TrimmedOperator { matrix: dense.principal_submatrix(&kept), kept_indices: kept })
}

/// Assembles only the kept (K·|𝒜|)² block, without the full dense matrix.
pub fn build_trimmed(spec: &BakerSpec) -> TrimmedOperator {
    let kept = spec.kept_indices();
    TrimmedOperator { matrix: dense_columns(spec, &kept, &kept), kept_indices: kept }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cantor_spec(k: usize) -> BakerSpec {
        BakerSpec::with_tau(3, &[0, 2], 0.1, k).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(BakerSpec::with_tau(3, &[], 0.1, 2).is_err());
        assert!(BakerSpec::with_tau(3, &[3], 0.1, 2).is_err());
        assert!(BakerSpec::with_tau(3, &[2, 1], 0.1, 2).is_err());
        assert!(BakerSpec::with_tau(1, &[0], 0.1, 2).is_err());
        assert!(BakerSpec::with_tau(3, &[1], 0.1, 0).is_err());
        let s = BakerSpec::with_tau(5, &[1, 2, 3], 0.05, 125).unwrap();
        assert_eq!(s.n(), 625);
        assert!((s.delta() - 0.682_606_194_485_985_3).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let s = BakerSpec::with_tau(5, &[1, 2, 3], 0.05, 7).unwrap();
        let json = serde_json::to_string(&s.config().unwrap()).unwrap();
        assert!(json.contains("\"M\":5") && json.contains("\"K\":7"));
        let back: BakerSpecConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(BakerSpec::from_config(&back).unwrap(), s);
    }

    #[test]
    fn projection_examples() {
        let s = BakerSpec::with_tau(3, &[1], 0.1, 2).unwrap();
        let u = ComplexVector::from_real(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(project(&s, 0, &u).unwrap().as_slice(), &u[0..2]);
        assert_eq!(project(&s, 2, &u).unwrap().as_slice(), &u[4..6]);
        assert_eq!(project(&s, 1, &u).unwrap(), ComplexVector::from_real(&[2.0, 3.0]));
        assert!(project(&s, 3, &u).is_err());
        assert!(project(&s, 0, &u[..5]).is_err());
    }

    #[test]
    fn zero_columns_for_single_letter() {
        let s = BakerSpec::with_tau(3, &[1], 0.1, 2).unwrap();
        let b = build_dense(&s);
        let d = b.dense().unwrap();
        let zero_cols: Vec<usize> = (0..6).filter(|&j| d.column(j).iter().all(|z| *z == ZERO)).collect();
        // Columns outside the alphabet strip vanish structurally; column 2
        // (in-block index 0) vanishes too because χ(0) = 0.
        assert_eq!(zero_cols, vec![0, 1, 2, 4, 5]);
        assert!(d.column(3).iter().any(|z| *z != ZERO));
        let t = trim(&b).unwrap();
        assert_eq!(t.kept_indices, vec![2, 3]);
        assert_eq!(t.matrix.dims(), (2, 2));
    }

    #[test]
    fn k_equal_one_is_zero_operator() {
        let s = BakerSpec::with_tau(3, &[0, 1, 2], 0.1, 1).unwrap();
        assert_eq!(build_dense(&s).dense().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn full_alphabet_trim_is_identity_map() {
        let s = BakerSpec::with_tau(3, &[0, 1, 2], 0.2, 4).unwrap();
        let b = build_dense(&s);
        let t = trim(&b).unwrap();
        assert_eq!(t.kept_indices, (0..12).collect::<Vec<_>>());
        assert_eq!(&t.matrix, b.dense().unwrap());
    }

    #[test]
    fn trimmed_direct_matches_trimmed_dense() {
        let s = cantor_spec(5);
        let a = trim(&build_dense(&s)).unwrap();
        let b = build_trimmed(&s);
        assert_eq!(a.kept_indices, b.kept_indices);
        assert!((&a.matrix - &b.matrix).max_abs() < 1e-14);
    }

    #[test]
    fn zero_input_and_linearity_of_expanded_kernel() {
        let s = cantor_spec(3);
        let z = apply_expanded(&s, &vec![ZERO; 9]).unwrap();
        assert!(z.iter().all(|x| *x == ZERO));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = ComplexVector::random_gaussian(9, &mut rng);
        let v = ComplexVector::random_gaussian(9, &mut rng);
        let (al, be) = (C64::new(0.3, -1.2), C64::new(-2.0, 0.5));
        let lhs = apply_expanded(&s, &u.scaled(al).axpy(be, &v)).unwrap();
        let rhs = apply_expanded(&s, &u).unwrap().scaled(al).axpy(be, &apply_expanded(&s, &v).unwrap());
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).norm() < 1e-10);
        }
    }

    #[test]
    fn fast_path_factors_through_alphabet_projection() {
        let s = cantor_spec(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = ComplexVector::random_gaussian(12, &mut rng);
        let kept = s.kept_indices();
        let projected: Vec<C64> =
            (0..12).map(|j| if kept.contains(&j) { u[j] } else { ZERO }).collect();
        let a = apply_fast(&s, &u).unwrap();
        let b = apply_fast(&s, &projected).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adjoint_of_adjoint_and_norms() {
        let s = cantor_spec(6);
        let b = build_dense(&s);
        let d = b.dense().unwrap();
        assert_eq!(&d.adjoint().adjoint(), d);
        assert!((d.operator_norm() - d.adjoint().operator_norm()).abs() < 1e-9);
    }
}
