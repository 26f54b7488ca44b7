//! End-to-end experiment runs with reproducible CSV output and a JSON
//! metadata sidecar.
//!
//! Every run produces an [`ExperimentRun`]: a deterministic
//! [`ExperimentRecord`] (config, per-point results, fits, diagnostics) plus
//! wall-clock timings and the raw data behind the CSV files. Timings and the
//! creation timestamp only appear in the sidecar, so reruns with the same
//! config produce byte-identical CSVs.
//!
//! CSV schemas (header row included, floats in shortest round-trip form):
//!
//! | file                       | columns                                                             |
//! |----------------------------|---------------------------------------------------------------------|
//! | `spectrum.csv`             | `re,im,abs,source,N,M,alphabet,tau`                                 |
//! | `weyl.csv`                 | `K,N,nu,count,boundary,log_N_over_log_M,log_count_over_log_M`       |
//! | `nu_scan.csv`              | `N,nu,count,count_perturbed,boundary`                               |
//! | `delta_zero.csv`           | `N,rank,abs,log_abs`                                                |
//! | `delta_zero_spectrum.csv`  | same as `spectrum.csv`                                              |
//! | `perturb.csv`              | `K,N,nu,count,count_perturbed`                                      |
//! | `propagation_forward.csv`  | `k,index,abs_value`                                                 |
//! | `propagation_backward.csv` | `k,index,abs_value`                                                 |
//! | `eigvec.csv`               | `index,abs_value`                                                   |
//! | `identity.csv`             | `K,N,lambda_re,lambda_im,L,ell,residual,modified_residual,remainder_norm,rank_a,rank_bound,schedule_valid,forward_back_norm` |
//!
//! `alphabet` is written as letters joined by `;`. Empty cells mean "not
//! available" (a zero count has no logarithm, an unperturbed scan has no
//! perturbed count). The sidecar is `<kind>.json`.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baker::{build_trimmed, BakerOperator, BakerSpec};
use crate::cantor::smooth_schedule;
use crate::cutoff::{estimate_decay_envelope, EnvelopeKind};
use crate::dft::dft;
use crate::error::{invalid, Error, Result};
use crate::matrix::{norm, ComplexMatrix, ComplexVector, C64};
use crate::propagation::{
    adaptive_smooth_identity, concentration_region, localization_norms, mass_concentration, propagate_random,
    Direction, LocalizationCheck,
};
use crate::spectral::{
    count_above, eigenvalues, eigenvector, linear_fit, loglog_slope, matrix_hash, LogLogFit, Spectrum,
    SpectrumSource,
};

/// Library version embedded in every record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Eigenvalues whose sampled backward error exceeds this (relative to ‖A‖)
/// fail their grid point.
const RESIDUAL_LIMIT: f64 = 1e-8;
/// Number of leading eigenvalues in the δ = 0 decay fit.
const DECAY_TOP: usize = 5;
/// Eigenvalues closer than this (relative) to the chosen one trigger the
/// clustered-eigenvalue warning in the eigenvector dump.
const CLUSTER_GAP: f64 = 1e-6;
/// L values tried when looking for valid smooth schedules in the
/// localization check.
const LOCALIZATION_L: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    WeylScan,
    NuScan,
    DeltaZero,
    Perturb,
    Propagate,
    Eigvec,
    VerifyIdentity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Spectrum,
        ExperimentKind::WeylScan,
        ExperimentKind::NuScan,
        ExperimentKind::DeltaZero,
        ExperimentKind::Perturb,
        ExperimentKind::Propagate,
        ExperimentKind::Eigvec,
        ExperimentKind::VerifyIdentity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::WeylScan => "weyl-scan",
            ExperimentKind::NuScan => "nu-scan",
            ExperimentKind::DeltaZero => "delta-zero",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Propagate => "propagate",
            ExperimentKind::Eigvec => "eigvec",
            ExperimentKind::VerifyIdentity => "verify-identity",
        }
    }
}

/// `start, start + 0.1, …, end` as exact decimal tenths.
pub fn tenths(start_tenths: u32, end_tenths: u32) -> Vec<f64> {
    (start_tenths..=end_tenths).map(|t| t as f64 / 10.0).collect()
}

fn default_steps() -> usize {
    3
}

fn default_rank() -> usize {
    50
}

fn default_lambdas() -> Vec<f64> {
    vec![0.4, 0.7, 4.0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(rename = "M")]
    pub base: usize,
    pub alphabet: Vec<usize>,
    pub tau: f64,
    #[serde(rename = "K_list")]
    pub k_list: Vec<usize>,
    #[serde(default)]
    pub nu_list: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub perturbation_norm: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Propagation steps.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// 1-based rank (by decreasing |λ|) of the dumped eigenvector.
    #[serde(default = "default_rank")]
    pub rank: usize,
    /// Real spectral parameters for the identity checks.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Worker threads for grid scans; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Default parameters for each kind. `full` extends the Weyl grid from
    /// K ≤ 375 to K ≤ 625.
    pub fn for_kind(kind: ExperimentKind, full: bool) -> Self {
        let weyl_k: Vec<usize> = (125..=if full { 625 } else { 375 }).step_by(50).collect();
        let base = Self {
            kind,
            base: 5,
            alphabet: vec![1, 2, 3],
            tau: 0.05,
            k_list: weyl_k,
            nu_list: tenths(10, 15),
            seed: 0,
            perturbation_norm: 0.0,
            output_dir: default_output_dir(),
            steps: default_steps(),
            rank: default_rank(),
            lambdas: default_lambdas(),
            workers: None,
        };
        match kind {
            ExperimentKind::Spectrum => Self { k_list: vec![125], ..base },
            ExperimentKind::WeylScan => base,
            ExperimentKind::NuScan => {
                Self { k_list: vec![625], nu_list: tenths(10, 30), perturbation_norm: 1e-10, ..base }
            }
            ExperimentKind::Perturb => Self { perturbation_norm: 1e-5, ..base },
            ExperimentKind::DeltaZero => {
                Self { base: 3, alphabet: vec![1], tau: 0.1, k_list: vec![81, 243], nu_list: vec![], ..base }
            }
            ExperimentKind::Propagate => {
                Self { base: 3, alphabet: vec![0, 2], tau: 0.1, k_list: vec![729], nu_list: vec![], ..base }
            }
            ExperimentKind::Eigvec => {
                Self { base: 4, alphabet: vec![1, 2], tau: 0.1, k_list: vec![1024], nu_list: vec![], ..base }
            }
            ExperimentKind::VerifyIdentity => Self {
                base: 3,
                alphabet: vec![0, 2],
                tau: 0.1,
                k_list: vec![9, 27, 81],
                nu_list: vec![1.0],
                ..base
            },
        }
    }

    /// Spec at the i-th K.
    pub fn spec(&self, k: usize) -> Result<BakerSpec> {
        BakerSpec::with_tau(self.base, &self.alphabet, self.tau, k)
    }

    /// Stable hash of the serialized config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        let mut h = DefaultHasher::new();
        json.hash(&mut h);
        format!("{:016x}", h.finish())
    }

    /// General and kind-specific preconditions.
    pub fn validate(&self) -> Result<()> {
        if self.k_list.is_empty() {
            return invalid("K_list is empty");
        }
        if let Some(k) = self.k_list.iter().find(|&&k| k == 0) {
            return invalid(format!("every K must be positive, got {k}"));
        }
        if let Some(nu) = self.nu_list.iter().find(|nu| !(**nu >= 0.0) || !nu.is_finite()) {
            return invalid(format!("every nu must be finite and nonnegative, got {nu}"));
        }
        if !(0.0..=1.0).contains(&self.perturbation_norm) {
            return invalid(format!("perturbation_norm must lie in [0, 1], got {}", self.perturbation_norm));
        }
        if self.workers == Some(0) {
            return invalid("workers must be positive");
        }
        self.spec(self.k_list[0])?;
        let distinct = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.dedup();
            s.len()
        };
        match self.kind {
            ExperimentKind::WeylScan | ExperimentKind::Perturb => {
                if distinct(&self.k_list) < 3 {
                    return invalid("a Weyl scan needs at least three distinct K");
                }
                if self.nu_list.is_empty() {
                    return invalid("nu_list is empty");
                }
            }
            ExperimentKind::NuScan => {
                if self.k_list.len() != 1 {
                    return invalid("a nu scan runs at a single N");
                }
                if self.nu_list.len() < 5 {
                    return invalid("a nu scan needs at least five nu values");
                }
                if self.nu_list.iter().any(|&nu| nu <= 0.0) {
                    return invalid("a nu scan fits log nu, so every nu must be positive");
                }
            }
            ExperimentKind::DeltaZero => {
                if self.alphabet.len() != 1 {
                    return invalid(format!("delta = 0 needs a single letter, got {}", self.alphabet.len()));
                }
            }
            ExperimentKind::Propagate => {
                if self.steps == 0 {
                    return invalid("steps must be at least 1");
                }
            }
            ExperimentKind::Eigvec => {
                if self.k_list.len() != 1 {
                    return invalid("an eigenvector dump runs at a single N");
                }
                let dim = self.k_list[0] * self.alphabet.len();
                if self.rank == 0 || self.rank > dim {
                    return invalid(format!("rank must lie in 1..={dim}, got {}", self.rank));
                }
            }
            ExperimentKind::VerifyIdentity => {
                if self.lambdas.is_empty() || self.lambdas.iter().any(|l| *l == 0.0 || !l.is_finite()) {
                    return invalid("lambdas must be nonempty, finite and nonzero");
                }
                if self.nu_list.len() != 1 || self.nu_list[0] <= 0.0 {
                    return invalid("identity checks take exactly one positive nu");
                }
            }
            ExperimentKind::Spectrum => {}
        }
        Ok(())
    }
}

/// `𝒩_N(ν)` at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountPoint {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: f64,
    pub count: usize,
    pub boundary: usize,
    pub count_perturbed: Option<usize>,
}

/// A fitted slope, with its perturbed counterpart when available.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// ν for Weyl fits; `None` for the single ν-scan fit.
    pub nu: Option<f64>,
    pub fit: LogLogFit,
    pub perturbed: Option<LogLogFit>,
    pub slope_delta: Option<f64>,
}

/// Reference slopes derived from the config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeTargets {
    pub delta: f64,
    pub one_minus_delta: f64,
    /// Gevrey order s of the cutoff.
    pub s: f64,
    pub s_one_minus_delta: f64,
}

/// Diagnostics of one eigensolve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub dim: usize,
    pub source: SpectrumSource,
    pub spectral_radius: f64,
    pub max_relative_residual: f64,
    /// Largest singular value of the unscaled Gaussian perturbation.
    pub raw_perturbation_norm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    #[serde(rename = "K")]
    pub k: usize,
    pub message: String,
}

/// Leading |λ_k| for one N and the line through `(k, ln|λ_k|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub top_abs: Vec<f64>,
    pub fit: Option<LogLogFit>,
}

/// Leading magnitudes at two consecutive N of the K list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossNComparison {
    pub n_small: usize,
    pub n_large: usize,
    pub abs_diffs: Vec<f64>,
    pub max_abs_diff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub direction: Direction,
    pub k: usize,
    pub concentration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigvecReport {
    pub rank: usize,
    pub lambda: C64,
    pub abs: f64,
    /// `-log|λ| / log M`.
    pub exponent: f64,
    /// `‖(B - λ)v‖` for the unit vector v on the full space.
    pub residual: f64,
    pub norm: f64,
    /// Distance to the nearest other eigenvalue.
    pub min_gap: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub l: f64,
    pub ell: usize,
    pub residual: f64,
    pub modified_residual: f64,
    pub remainder_norm: f64,
    pub rank_a: usize,
    pub rank_bound: f64,
    pub schedule_valid: bool,
    pub forward_back_norm: f64,
}

/// Localization norms along one valid smooth schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub l: f64,
    pub checks: Vec<LocalizationCheck>,
}

/// Deterministic outcome of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub library_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// Grid points attempted (one per eigensolve target or assembly).
    pub attempted: usize,
    pub failures: Vec<PointFailure>,
    pub warnings: Vec<String>,
    pub targets: SlopeTargets,
    pub solves: Vec<SolveSummary>,
    pub points: Vec<CountPoint>,
    pub fits: Vec<SlopeFit>,
    pub decay: Vec<DecayReport>,
    pub cross_n: Vec<CrossNComparison>,
    pub concentration: Vec<ConcentrationPoint>,
    pub eigvec: Option<EigvecReport>,
    pub identity: Vec<IdentityReport>,
    pub localization: Vec<LocalizationReport>,
}

impl ExperimentRecord {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let spec = config.spec(config.k_list[0])?;
        let delta = spec.delta();
        let s = spec.chi().gevrey_order();
        Ok(Self {
            kind: config.kind,
            library_version: VERSION.to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            attempted: 0,
            failures: Vec::new(),
            warnings: Vec::new(),
            targets: SlopeTargets { delta, one_minus_delta: 1.0 - delta, s, s_one_minus_delta: s * (1.0 - delta) },
            solves: Vec::new(),
            points: Vec::new(),
            fits: Vec::new(),
            decay: Vec::new(),
            cross_n: Vec::new(),
            concentration: Vec::new(),
            eigvec: None,
            identity: Vec::new(),
            localization: Vec::new(),
        })
    }

    /// 0 on success, 2 when at least 10% of attempted points failed.
    pub fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() && 10 * self.failures.len() >= self.attempted {
            2
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

/// A spectrum tagged with the K it was computed at.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSpectrum {
    pub k: usize,
    pub spectrum: Spectrum,
}

/// `|v|` on the grid, for one propagation step or an eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub direction: Option<Direction>,
    pub k: usize,
    pub abs_values: Vec<f64>,
}

/// Record plus the non-deterministic timings and the bulk data written to
/// CSV.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub record: ExperimentRecord,
    pub timings: Vec<Timing>,
    pub spectra: Vec<LabeledSpectrum>,
    pub profiles: Vec<Profile>,
}

impl ExperimentRun {
    fn new(record: ExperimentRecord) -> Self {
        Self { record, timings: Vec::new(), spectra: Vec::new(), profiles: Vec::new() }
    }

    pub fn exit_code(&self) -> i32 {
        self.record.exit_code()
    }
}

fn timed<T>(timings: &mut Vec<Timing>, label: impl Into<String>, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.push(Timing { label: label.into(), seconds: start.elapsed().as_secs_f64() });
    out
}

/// Runs `f` on the configured pool.
fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Dispatches on `config.kind`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentRun> {
    match config.kind {
        ExperimentKind::Spectrum => run_spectrum(config),
        ExperimentKind::WeylScan => run_weyl_scan(config),
        ExperimentKind::NuScan => run_nu_scan(config),
        ExperimentKind::DeltaZero => run_delta_zero(config),
        ExperimentKind::Perturb => run_perturbation(config),
        ExperimentKind::Propagate => run_propagation_figure(config),
        ExperimentKind::Eigvec => run_eigvec_dump(config),
        ExperimentKind::VerifyIdentity => run_identity_check(config),
    }
}

fn require_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.kind != kind {
        return invalid(format!("config is for {}, not {}", config.kind.as_str(), kind.as_str()));
    }
    config.validate()
}

/// Gaussian perturbation of an n×n matrix, scaled to operator norm `target`.
/// Returns the scaled matrix and the norm of the raw draw.
pub fn gaussian_perturbation(n: usize, target: f64, seed: u64, stream: u64) -> (ComplexMatrix, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let p = ComplexMatrix::random_gaussian(n, n, &mut rng);
    let raw = p.operator_norm();
    (p.scaled(C64::new(target / raw, 0.0)), raw)
}

struct Solved {
    summary: SolveSummary,
    spectrum: Spectrum,
}

/// Trimmed eigensolve at one K, optionally with `B̃ + P`.
fn solve_point(config: &ExperimentConfig, k: usize, perturbed: bool) -> Result<Solved> {
    let spec = config.spec(k)?;
    let mut matrix = build_trimmed(&spec).matrix;
    let mut raw_perturbation_norm = None;
    let source = if perturbed && config.perturbation_norm > 0.0 {
        let (p, raw) = gaussian_perturbation(matrix.rows(), config.perturbation_norm, config.seed, k as u64);
        matrix = &matrix + &p;
        raw_perturbation_norm = Some(raw);
        SpectrumSource::Perturbed
    } else {
        SpectrumSource::Trimmed
    };
    let spectrum = eigenvalues(&matrix)?.with_provenance(source, spec.n(), matrix_hash(&matrix));
    let max_relative_residual = spectrum.max_relative_residual();
    if !(max_relative_residual <= RESIDUAL_LIMIT) {
        return Err(Error::NoConvergence {
            matrix_hash: spectrum.spec_hash,
            dim: matrix.rows(),
            converged: spectrum.len(),
            partial: Vec::new(),
        });
    }
    let summary = SolveSummary {
        k,
        n: spec.n(),
        dim: matrix.rows(),
        source,
        spectral_radius: spectrum.spectral_radius(),
        max_relative_residual,
        raw_perturbation_norm,
    };
    Ok(Solved { summary, spectrum })
}

struct Scan {
    /// Per K: plain solve and optional perturbed solve.
    outcomes: Vec<(usize, Result<Solved>, Option<Result<Solved>>)>,
}

/// Solves every K (and its perturbed copy when asked) in parallel; results
/// are kept in K-list order.
fn scan(config: &ExperimentConfig, with_perturbed: bool, timings: &mut Vec<Timing>) -> Result<Scan> {
    let mut tasks: Vec<(usize, bool)> = Vec::new();
    for &k in &config.k_list {
        tasks.push((k, false));
        if with_perturbed {
            tasks.push((k, true));
        }
    }
    let results: Vec<(usize, bool, Result<Solved>, f64)> = in_pool(config.workers, || {
        tasks
            .par_iter()
            .map(|&(k, p)| {
                let start = Instant::now();
                let r = solve_point(config, k, p);
                (k, p, r, start.elapsed().as_secs_f64())
            })
            .collect()
    })?;
    let mut outcomes = Vec::new();
    let mut iter = results.into_iter().peekable();
    while let Some((k, _, plain, secs)) = iter.next() {
        timings.push(Timing { label: format!("solve K={k}"), seconds: secs });
        let perturbed = if with_perturbed {
            let (_, _, r, secs) = iter.next().expect("perturbed task follows its plain task");
            timings.push(Timing { label: format!("solve K={k} perturbed"), seconds: secs });
            Some(r)
        } else {
            None
        };
        outcomes.push((k, plain, perturbed));
    }
    Ok(Scan { outcomes })
}

/// Counts at every (K, ν), skipping failed K.
fn collect_counts(
    config: &ExperimentConfig,
    scan: Scan,
    record: &mut ExperimentRecord,
    spectra: &mut Vec<LabeledSpectrum>,
) -> Result<()> {
    record.attempted = scan.outcomes.len();
    for (k, plain, perturbed) in scan.outcomes {
        let plain = match plain {
            Ok(s) => s,
            Err(e) => {
                record.failures.push(PointFailure { k, message: e.to_string() });
                continue;
            }
        };
        let perturbed = match perturbed.transpose() {
            Ok(p) => p,
            Err(e) => {
                record.failures.push(PointFailure { k, message: format!("perturbed solve: {e}") });
                continue;
            }
        };
        for &nu in &config.nu_list {
            let c = count_above(&plain.spectrum.eigenvalues, config.base, nu)?;
            let count_perturbed = match &perturbed {
                Some(p) => Some(count_above(&p.spectrum.eigenvalues, config.base, nu)?.count),
                None => None,
            };
            record.points.push(CountPoint {
                k,
                n: plain.summary.n,
                nu,
                count: c.count,
                boundary: c.boundary,
                count_perturbed,
            });
        }
        record.solves.push(plain.summary);
        spectra.push(LabeledSpectrum { k, spectrum: plain.spectrum });
        if let Some(p) = perturbed {
            record.solves.push(p.summary);
            spectra.push(LabeledSpectrum { k, spectrum: p.spectrum });
        }
    }
    Ok(())
}

/// Log–log fit of `(x, count)` over points with a positive count.
fn fit_counts(points: &[(f64, usize)]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0).map(|&(x, c)| (x, c as f64)).collect();
    loglog_slope(&pts).ok()
}

/// Per-ν Weyl fits of `log 𝒩 / log M` against `log N / log M`.
fn weyl_fits(config: &ExperimentConfig, record: &mut ExperimentRecord) {
    for &nu in &config.nu_list {
        let at_nu: Vec<&CountPoint> = record.points.iter().filter(|p| p.nu == nu).collect();
        let plain: Vec<(f64, usize)> = at_nu.iter().map(|p| (p.n as f64, p.count)).collect();
        let fit = fit_counts(&plain);
        let perturbed = if at_nu.iter().all(|p| p.count_perturbed.is_some()) && !at_nu.is_empty() {
            let pts: Vec<(f64, usize)> =
                at_nu.iter().map(|p| (p.n as f64, p.count_perturbed.unwrap_or(0))).collect();
            fit_counts(&pts)
        } else {
            None
        };
        match fit {
            Some(fit) => record.fits.push(SlopeFit {
                nu: Some(nu),
                fit,
                perturbed,
                slope_delta: perturbed.map(|p| p.slope - fit.slope),
            }),
            None => record.warnings.push(format!("no slope at nu = {nu}: fewer than two positive counts")),
        }
    }
}

/// Trimmed spectra at every K in the list.
pub fn run_spectrum(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Spectrum)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let s = scan(config, false, &mut run.timings)?;
    collect_counts(config, s, &mut run.record, &mut run.spectra)?;
    Ok(run)
}

/// Counts over the (K, ν) grid and one Weyl slope per ν.
pub fn run_weyl_scan(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::WeylScan)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let s = scan(config, false, &mut run.timings)?;
    collect_counts(config, s, &mut run.record, &mut run.spectra)?;
    weyl_fits(config, &mut run.record);
    Ok(run)
}

/// Counts at a single N over many ν; slope of `log 𝒩` against `log ν`,
/// with the perturbed operator alongside when `perturbation_norm > 0`.
pub fn run_nu_scan(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::NuScan)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let s = scan(config, config.perturbation_norm > 0.0, &mut run.timings)?;
    collect_counts(config, s, &mut run.record, &mut run.spectra)?;
    let points = &run.record.points;
    if !points.is_empty() {
        let plain: Vec<(f64, usize)> = points.iter().map(|p| (p.nu, p.count)).collect();
        let perturbed = if points.iter().all(|p| p.count_perturbed.is_some()) {
            let pts: Vec<(f64, usize)> = points.iter().map(|p| (p.nu, p.count_perturbed.unwrap_or(0))).collect();
            fit_counts(&pts)
        } else {
            None
        };
        match fit_counts(&plain) {
            Some(fit) => run.record.fits.push(SlopeFit {
                nu: None,
                fit,
                perturbed,
                slope_delta: perturbed.map(|p| p.slope - fit.slope),
            }),
            None => run.record.warnings.push("no slope: fewer than two positive counts".into()),
        }
    }
    Ok(run)
}

/// Leading eigenvalue magnitudes for a single-letter alphabet.
pub fn run_delta_zero(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::DeltaZero)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let s = scan(config, false, &mut run.timings)?;
    collect_counts(config, s, &mut run.record, &mut run.spectra)?;
    for ls in &run.spectra {
        let top_abs: Vec<f64> = ls
            .spectrum
            .sorted_by_modulus()
            .iter()
            .map(|z| z.norm())
            .filter(|r| *r > 0.0)
            .take(DECAY_TOP)
            .collect();
        let pts: Vec<(f64, f64)> = top_abs.iter().enumerate().map(|(i, r)| ((i + 1) as f64, r.ln())).collect();
        let fit = linear_fit(&pts).ok();
        run.record.decay.push(DecayReport { k: ls.k, n: ls.spectrum.n, top_abs, fit });
    }
    for pair in run.record.decay.windows(2) {
        let m = pair[0].top_abs.len().min(pair[1].top_abs.len());
        let abs_diffs: Vec<f64> = (0..m).map(|i| (pair[0].top_abs[i] - pair[1].top_abs[i]).abs()).collect();
        let max_abs_diff = abs_diffs.iter().copied().fold(0.0, f64::max);
        run.record.cross_n.push(CrossNComparison {
            n_small: pair[0].n,
            n_large: pair[1].n,
            abs_diffs,
            max_abs_diff,
        });
    }
    Ok(run)
}

/// Weyl scan of `B̃` and `B̃ + P` side by side, with per-ν slope deltas.
/// A zero perturbation norm skips P entirely, so both columns coincide.
pub fn run_perturbation(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Perturb)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let s = scan(config, config.perturbation_norm > 0.0, &mut run.timings)?;
    collect_counts(config, s, &mut run.record, &mut run.spectra)?;
    if config.perturbation_norm == 0.0 {
        for p in &mut run.record.points {
            p.count_perturbed = Some(p.count);
        }
    }
    weyl_fits(config, &mut run.record);
    Ok(run)
}

/// `|F_N B^k f|` and `|(B*)^k f|` for a random f, with the share of the
/// Fourier-side mass near `Φ^{-steps}([0,1])` at every step.
pub fn run_propagation_figure(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Propagate)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let spec = config.spec(config.k_list[0])?;
    let region = concentration_region(&spec, config.steps)?;
    run.record.attempted = 2;
    for direction in [Direction::Forward, Direction::Backward] {
        let label = format!("propagate {direction:?}");
        let vs = timed(&mut run.timings, label, || propagate_random(&spec, config.steps, direction, config.seed))?;
        for (i, v) in vs.iter().enumerate() {
            let k = i + 1;
            run.record.concentration.push(ConcentrationPoint {
                direction,
                k,
                concentration: mass_concentration(v, &region),
            });
            run.profiles.push(Profile { direction: Some(direction), k, abs_values: v.abs() });
        }
    }
    Ok(run)
}

/// Eigenvector of the `rank`-th largest eigenvalue, dumped as `|F_N v|`.
///
/// Inverse iteration runs on the trimmed matrix; the full eigenvector is
/// recovered as `v = B u / λ` where u is the trimmed vector placed on the
/// kept indices (the dropped columns of B vanish).
pub fn run_eigvec_dump(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Eigvec)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    run.record.attempted = 1;
    let spec = config.spec(config.k_list[0])?;
    let trimmed = build_trimmed(&spec);
    let spectrum = timed(&mut run.timings, "eigenvalues", || eigenvalues(&trimmed.matrix))?
        .with_provenance(SpectrumSource::Trimmed, spec.n(), matrix_hash(&trimmed.matrix));
    let sorted = spectrum.sorted_by_modulus();
    let lambda = sorted[config.rank - 1];
    if lambda.norm() == 0.0 {
        return invalid(format!("eigenvalue of rank {} is zero", config.rank));
    }
    let min_gap = sorted
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != config.rank - 1)
        .map(|(_, z)| (z - lambda).norm())
        .fold(f64::INFINITY, f64::min);
    let warning = (min_gap < CLUSTER_GAP * lambda.norm().max(1.0)).then(|| {
        format!("eigenvalue {lambda} is clustered (nearest neighbour at distance {min_gap:e}); the vector may be ill-conditioned")
    });
    if let Some(w) = &warning {
        run.record.warnings.push(w.clone());
    }
    let (u, _) = timed(&mut run.timings, "inverse iteration", || eigenvector(&trimmed.matrix, lambda))?;
    let op = BakerOperator::new(spec.clone());
    let mut embedded = vec![C64::new(0.0, 0.0); spec.n()];
    for (&j, z) in trimmed.kept_indices.iter().zip(u.iter()) {
        embedded[j] = *z;
    }
    let mut v = op.apply(&embedded);
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let bv = op.apply(&v);
    let residual = norm(&bv.iter().zip(&v).map(|(b, x)| b - lambda * x).collect::<Vec<_>>());
    let fourier = dft(&ComplexVector::new(v)?);
    run.record.eigvec = Some(EigvecReport {
        rank: config.rank,
        lambda,
        abs: lambda.norm(),
        exponent: -lambda.norm().ln() / (config.base as f64).ln(),
        residual,
        norm: fourier.norm(),
        min_gap,
        warning,
    });
    run.profiles.push(Profile { direction: None, k: config.rank, abs_values: fourier.abs() });
    run.spectra.push(LabeledSpectrum { k: spec.k(), spectrum });
    Ok(run)
}

/// Approximate-inverse identity with adaptive L at every (K, λ), plus the
/// localization norms along every valid smooth schedule from a short L list.
pub fn run_identity_check(config: &ExperimentConfig) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::VerifyIdentity)?;
    let mut run = ExperimentRun::new(ExperimentRecord::new(config)?);
    let nu = config.nu_list[0];
    let tasks: Vec<(usize, f64)> =
        config.k_list.iter().flat_map(|&k| config.lambdas.iter().map(move |&l| (k, l))).collect();
    run.record.attempted = tasks.len();
    let results: Vec<(usize, f64, Result<IdentityReport>, f64)> = in_pool(config.workers, || {
        tasks
            .par_iter()
            .map(|&(k, lambda)| {
                let start = Instant::now();
                let r = identity_point(config, k, nu, lambda);
                (k, lambda, r, start.elapsed().as_secs_f64())
            })
            .collect()
    })?;
    for (k, lambda, r, secs) in results {
        run.timings.push(Timing { label: format!("identity K={k} lambda={lambda}"), seconds: secs });
        match r {
            Ok(rep) => run.record.identity.push(rep),
            Err(e) => run.record.failures.push(PointFailure { k, message: format!("lambda={lambda}: {e}") }),
        }
    }
    let spec0 = config.spec(config.k_list[0])?;
    let envelope = estimate_decay_envelope(spec0.chi(), EnvelopeKind::Gevrey)?;
    for &k in &config.k_list {
        let spec = config.spec(k)?;
        for &l in &LOCALIZATION_L {
            let schedule = smooth_schedule(spec.n(), spec.base(), nu, spec.chi(), l)?;
            if !schedule.valid {
                continue;
            }
            let checks = timed(&mut run.timings, format!("localization K={k} L={l}"), || {
                localization_norms(&spec, &schedule, &envelope)
            })?;
            run.record.localization.push(LocalizationReport { k, l, checks });
        }
    }
    Ok(run)
}

fn identity_point(config: &ExperimentConfig, k: usize, nu: f64, lambda: f64) -> Result<IdentityReport> {
    let spec = config.spec(k)?;
    let adaptive = adaptive_smooth_identity(&spec, nu, C64::new(lambda, 0.0))?;
    let parts = &adaptive.parts;
    Ok(IdentityReport {
        k,
        n: spec.n(),
        lambda,
        l: adaptive.l,
        ell: parts.schedule.ell,
        residual: parts.residual().relative,
        modified_residual: parts.modified_residual().relative,
        remainder_norm: adaptive.remainder_norm,
        rank_a: parts.rank_a,
        rank_bound: parts.schedule.rank_bound(spec.alphabet().len()),
        schedule_valid: parts.schedule.valid,
        forward_back_norm: parts.forward_back_norm()?,
    })
}

/// Human-readable one-line summaries of a record's headline numbers.
pub fn summary_lines(record: &ExperimentRecord) -> Vec<String> {
    let mut out = Vec::new();
    let t = &record.targets;
    for s in &record.solves {
        out.push(format!(
            "K={} N={} dim={} source={} radius={:.6} max_residual={:.1e}",
            s.k,
            s.n,
            s.dim,
            s.source.as_str(),
            s.spectral_radius,
            s.max_relative_residual
        ));
    }
    for f in &record.fits {
        let head = match f.nu {
            Some(nu) => format!("nu={nu}: slope={:.4}", f.fit.slope),
            None => format!("slope={:.4}", f.fit.slope),
        };
        let tail = match f.slope_delta {
            Some(d) => format!(" perturbed_delta={d:.2e}"),
            None => String::new(),
        };
        out.push(format!("{head} r2={:.4}{tail}", f.fit.r2));
    }
    if !record.fits.is_empty() {
        out.push(format!(
            "delta={:.5} 1-delta={:.5} s(1-delta)={:.5}",
            t.delta, t.one_minus_delta, t.s_one_minus_delta
        ));
    }
    for d in &record.decay {
        let tops: Vec<String> = d.top_abs.iter().map(|r| format!("{r:.6}")).collect();
        let r2 = d.fit.map(|f| format!("{:.4}", f.r2)).unwrap_or_else(|| "-".into());
        out.push(format!("N={} top |lambda| = [{}] log-linear r2={r2}", d.n, tops.join(", ")));
    }
    for c in &record.cross_n {
        out.push(format!("N={} vs N={}: max |difference| = {:.3e}", c.n_small, c.n_large, c.max_abs_diff));
    }
    for c in &record.concentration {
        out.push(format!("{:?} k={}: concentration={:.6}", c.direction, c.k, c.concentration));
    }
    if let Some(e) = &record.eigvec {
        out.push(format!(
            "rank {}: lambda={:.6}{:+.6}i |lambda|=M^-{:.4} residual={:.1e}",
            e.rank, e.lambda.re, e.lambda.im, e.exponent, e.residual
        ));
    }
    for r in &record.identity {
        out.push(format!(
            "K={} lambda={} L={} residual={:.1e} modified={:.1e} |R|={:.4} rank={}<={:.1} forward_back={:.4}",
            r.k, r.lambda, r.l, r.residual, r.modified_residual, r.remainder_norm, r.rank_a, r.rank_bound,
            r.forward_back_norm
        ));
    }
    for l in &record.localization {
        let ok = l.checks.iter().all(|c| c.dominated);
        out.push(format!("K={} L={}: localization dominated by envelope: {ok}", l.k, l.l));
    }
    for f in &record.failures {
        out.push(format!("FAILED K={}: {}", f.k, f.message));
    }
    for w in &record.warnings {
        out.push(format!("warning: {w}"));
    }
    out
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn alphabet_cell(alphabet: &[usize]) -> String {
    alphabet.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";")
}

fn opt_cell<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_spectrum_csv(path: &Path, config: &ExperimentConfig, spectra: &[LabeledSpectrum]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["re", "im", "abs", "source", "N", "M", "alphabet", "tau"])?;
    let alphabet = alphabet_cell(&config.alphabet);
    for ls in spectra {
        for z in ls.spectrum.sorted_by_modulus() {
            w.write_record([
                num(z.re),
                num(z.im),
                num(z.norm()),
                ls.spectrum.source.as_str().to_string(),
                ls.spectrum.n.to_string(),
                config.base.to_string(),
                alphabet.clone(),
                num(config.tau),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_profiles_csv(path: &Path, profiles: &[&Profile]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "index", "abs_value"])?;
    for p in profiles {
        for (i, a) in p.abs_values.iter().enumerate() {
            w.write_record([p.k.to_string(), i.to_string(), num(*a)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sidecar contents: the record plus timings and a creation timestamp.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub record: ExperimentRecord,
    pub timings: Vec<Timing>,
    pub created_unix_seconds: u64,
    pub csv_files: Vec<String>,
}

/// Writes the CSV file(s) and the JSON sidecar into `dir`; returns the
/// paths written, sidecar last.
pub fn write_outputs(run: &ExperimentRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rec = &run.record;
    let cfg = &rec.config;
    let mut written = Vec::new();
    let mut csv_path = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    match rec.kind {
        ExperimentKind::Spectrum => write_spectrum_csv(&csv_path("spectrum.csv"), cfg, &run.spectra)?,
        ExperimentKind::WeylScan => {
            let mut w = csv::Writer::from_path(csv_path("weyl.csv"))?;
            w.write_record([
                "K",
                "N",
                "nu",
                "count",
                "boundary",
                "log_N_over_log_M",
                "log_count_over_log_M",
            ])?;
            let lm = (cfg.base as f64).ln();
            for p in &rec.points {
                let log_count = (p.count > 0).then(|| (p.count as f64).ln() / lm);
                w.write_record([
                    p.k.to_string(),
                    p.n.to_string(),
                    num(p.nu),
                    p.count.to_string(),
                    p.boundary.to_string(),
                    num((p.n as f64).ln() / lm),
                    log_count.map(num).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
        ExperimentKind::NuScan => {
            let mut w = csv::Writer::from_path(csv_path("nu_scan.csv"))?;
            w.write_record(["N", "nu", "count", "count_perturbed", "boundary"])?;
            for p in &rec.points {
                w.write_record([
                    p.n.to_string(),
                    num(p.nu),
                    p.count.to_string(),
                    opt_cell(p.count_perturbed),
                    p.boundary.to_string(),
                ])?;
            }
            w.flush()?;
        }
        ExperimentKind::DeltaZero => {
            let mut w = csv::Writer::from_path(csv_path("delta_zero.csv"))?;
            w.write_record(["N", "rank", "abs", "log_abs"])?;
            for d in &rec.decay {
                for (i, r) in d.top_abs.iter().enumerate() {
                    w.write_record([d.n.to_string(), (i + 1).to_string(), num(*r), num(r.ln())])?;
                }
            }
            w.flush()?;
            write_spectrum_csv(&csv_path("delta_zero_spectrum.csv"), cfg, &run.spectra)?;
        }
        ExperimentKind::Perturb => {
            let mut w = csv::Writer::from_path(csv_path("perturb.csv"))?;
            w.write_record(["K", "N", "nu", "count", "count_perturbed"])?;
            for p in &rec.points {
                w.write_record([
                    p.k.to_string(),
                    p.n.to_string(),
                    num(p.nu),
                    p.count.to_string(),
                    opt_cell(p.count_perturbed),
                ])?;
            }
            w.flush()?;
        }
        ExperimentKind::Propagate => {
            for (direction, name) in
                [(Direction::Forward, "propagation_forward.csv"), (Direction::Backward, "propagation_backward.csv")]
            {
                let ps: Vec<&Profile> = run.profiles.iter().filter(|p| p.direction == Some(direction)).collect();
                write_profiles_csv(&csv_path(name), &ps)?;
            }
        }
        ExperimentKind::Eigvec => {
            let mut w = csv::Writer::from_path(csv_path("eigvec.csv"))?;
            w.write_record(["index", "abs_value"])?;
            for p in &run.profiles {
                for (i, a) in p.abs_values.iter().enumerate() {
                    w.write_record([i.to_string(), num(*a)])?;
                }
            }
            w.flush()?;
        }
        ExperimentKind::VerifyIdentity => {
            let mut w = csv::Writer::from_path(csv_path("identity.csv"))?;
            w.write_record([
                "K",
                "N",
                "lambda_re",
                "lambda_im",
                "L",
                "ell",
                "residual",
                "modified_residual",
                "remainder_norm",
                "rank_a",
                "rank_bound",
                "schedule_valid",
                "forward_back_norm",
            ])?;
            for r in &rec.identity {
                w.write_record([
                    r.k.to_string(),
                    r.n.to_string(),
                    num(r.lambda),
                    "0".to_string(),
                    num(r.l),
                    r.ell.to_string(),
                    num(r.residual),
                    num(r.modified_residual),
                    num(r.remainder_norm),
                    r.rank_a.to_string(),
                    num(r.rank_bound),
                    r.schedule_valid.to_string(),
                    num(r.forward_back_norm),
                ])?;
            }
            w.flush()?;
        }
    }
    let csv_files = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = Metadata {
        record: rec.clone(),
        timings: run.timings.clone(),
        created_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        csv_files,
    };
    let sidecar = dir.join(format!("{}.json", rec.kind.as_str()));
    fs::write(&sidecar, serde_json::to_string_pretty(&meta)?)?;
    written.push(sidecar);
    Ok(written)
}

/// Reads a sidecar back.
pub fn read_metadata(path: &Path) -> Result<Metadata> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
