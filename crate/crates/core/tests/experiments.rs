mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use open_baker::experiments::{
    gaussian_perturbation, read_metadata, run, write_outputs, ExperimentConfig, ExperimentKind,
};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_kind(kind, false);
    match kind {
        ExperimentKind::Spectrum => c.k_list = vec![10],
        ExperimentKind::WeylScan | ExperimentKind::Perturb => {
            c.k_list = vec![10, 15, 20];
            c.nu_list = vec![1.0, 1.5];
        }
        ExperimentKind::NuScan => {
            c.k_list = vec![25];
            c.nu_list = vec![1.0, 1.5, 2.0, 2.5, 3.0];
        }
        ExperimentKind::DeltaZero => c.k_list = vec![27, 81],
        ExperimentKind::Propagate => c.k_list = vec![27],
        ExperimentKind::Eigvec => {
            c.k_list = vec![16];
            c.rank = 3;
        }
        ExperimentKind::VerifyIdentity => {
            c.k_list = vec![9];
            c.lambdas = vec![0.7];
        }
    }
    c
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn csv_headers_follow_schema() {
    let expected: &[(ExperimentKind, &[(&str, &str)])] = &[
        (ExperimentKind::Spectrum, &[("spectrum.csv", "re,im,abs,source,N,M,alphabet,tau")]),
        (
            ExperimentKind::WeylScan,
            &[("weyl.csv", "K,N,nu,count,boundary,log_N_over_log_M,log_count_over_log_M")],
        ),
        (ExperimentKind::NuScan, &[("nu_scan.csv", "N,nu,count,count_perturbed,boundary")]),
        (
            ExperimentKind::DeltaZero,
            &[
                ("delta_zero.csv", "N,rank,abs,log_abs"),
                ("delta_zero_spectrum.csv", "re,im,abs,source,N,M,alphabet,tau"),
            ],
        ),
        (ExperimentKind::Perturb, &[("perturb.csv", "K,N,nu,count,count_perturbed")]),
        (
            ExperimentKind::Propagate,
            &[("propagation_forward.csv", "k,index,abs_value"), ("propagation_backward.csv", "k,index,abs_value")],
        ),
        (ExperimentKind::Eigvec, &[("eigvec.csv", "index,abs_value")]),
        (
            ExperimentKind::VerifyIdentity,
            &[(
                "identity.csv",
                "K,N,lambda_re,lambda_im,L,ell,residual,modified_residual,remainder_norm,rank_a,rank_bound,schedule_valid,forward_back_norm",
            )],
        ),
    ];
    for (kind, files) in expected {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&small(*kind)).unwrap();
        let written = write_outputs(&out, dir.path()).unwrap();
        for (name, cols) in files.iter() {
            assert_eq!(header(&dir.path().join(name)), *cols, "{name}");
        }
        let sidecar = written.last().unwrap();
        assert_eq!(sidecar.file_name().unwrap().to_str().unwrap(), format!("{}.json", kind.as_str()));
        assert_eq!(written.len(), files.len() + 1);
    }
}

#[test]
fn spectrum_rows_carry_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&small(ExperimentKind::Spectrum)).unwrap();
    write_outputs(&out, dir.path()).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("spectrum.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), out.spectra[0].spectrum.len());
    for row in &rows {
        assert_eq!(&row[4], "50");
        assert_eq!(&row[5], "5");
        assert_eq!(&row[6], "1;2;3");
        assert_eq!(&row[7], "0.05");
        let (re, im, abs): (f64, f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!((re.hypot(im) - abs).abs() <= 1e-15 * abs.max(1.0));
    }
}

#[test]
fn reruns_are_byte_identical() {
    for kind in [ExperimentKind::WeylScan, ExperimentKind::Propagate, ExperimentKind::Perturb] {
        let mut cfg = small(kind);
        cfg.perturbation_norm = if kind == ExperimentKind::Perturb { 1e-5 } else { cfg.perturbation_norm };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run(&cfg).unwrap();
        let rb = run(&cfg).unwrap();
        assert_eq!(ra.record, rb.record);
        let wa = write_outputs(&ra, a.path()).unwrap();
        let wb = write_outputs(&rb, b.path()).unwrap();
        // The sidecar holds timings, so only the CSVs are compared.
        for (x, y) in wa.iter().zip(&wb).take(wa.len() - 1) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{x:?}");
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let mut one = small(ExperimentKind::WeylScan);
    one.workers = Some(1);
    let mut four = one.clone();
    four.workers = Some(4);
    let a = run(&one).unwrap().record;
    let b = run(&four).unwrap().record;
    assert_eq!(a.points, b.points);
    assert_eq!(a.fits, b.fits);
}

#[test]
fn preconditions_rejected() {
    let mut c = small(ExperimentKind::WeylScan);
    c.k_list = vec![10];
    assert!(c.validate().is_err() && run(&c).is_err());
    c.k_list = vec![10, 10, 15];
    assert!(c.validate().is_err());

    let mut c = small(ExperimentKind::NuScan);
    c.nu_list = vec![1.0];
    assert!(run(&c).is_err());

    let mut c = small(ExperimentKind::DeltaZero);
    c.alphabet = vec![0, 1];
    assert!(run(&c).is_err());

    let mut c = small(ExperimentKind::Spectrum);
    c.k_list = vec![0];
    assert!(c.validate().is_err());

    let mut c = small(ExperimentKind::WeylScan);
    c.nu_list = vec![-0.5, 1.0];
    assert!(c.validate().is_err());

    let mut c = small(ExperimentKind::Perturb);
    c.perturbation_norm = 1.5;
    assert!(c.validate().is_err());
}

#[test]
fn perturbation_has_requested_norm() {
    for (n, target, seed) in [(12usize, 1e-5, 0u64), (20, 1e-10, 7), (30, 0.5, 11)] {
        let (p, raw) = gaussian_perturbation(n, target, seed, 3);
        let rows = p.as_slice();
        let measured = common::svd_max(rows, n);
        assert!((measured - target).abs() <= 1e-8 * target, "{measured} vs {target}");
        assert!(raw > 0.0);
        let (q, _) = gaussian_perturbation(n, target, seed, 3);
        assert_eq!(p, q);
        let (other, _) = gaussian_perturbation(n, target, seed, 4);
        assert_ne!(p, other);
    }
}

#[test]
fn zero_perturbation_reproduces_the_weyl_scan() {
    let weyl = run(&small(ExperimentKind::WeylScan)).unwrap().record;
    let mut cfg = small(ExperimentKind::Perturb);
    cfg.perturbation_norm = 0.0;
    let pert = run(&cfg).unwrap().record;
    assert_eq!(weyl.points.len(), pert.points.len());
    for (a, b) in weyl.points.iter().zip(&pert.points) {
        assert_eq!((a.k, a.n, a.nu.to_bits(), a.count), (b.k, b.n, b.nu.to_bits(), b.count));
        assert_eq!(b.count_perturbed, Some(b.count));
    }
    for (a, b) in weyl.fits.iter().zip(&pert.fits) {
        assert_eq!(a.fit, b.fit);
        assert_eq!(b.slope_delta, Some(0.0));
    }
}

#[test]
fn full_alphabet_slope_approaches_one() {
    let mut c = ExperimentConfig::for_kind(ExperimentKind::WeylScan, false);
    c.alphabet = vec![0, 1, 2, 3, 4];
    c.tau = 0.01;
    c.k_list = vec![25, 50, 100];
    c.nu_list = vec![1.0];
    let rec = run(&c).unwrap().record;
    assert_eq!(rec.targets.delta, 1.0);
    // Only a bounded number of eigenvalues is lost near the strip edges, so
    // count/N climbs to 1 and the local slopes come down to 1 from above.
    let pts: Vec<(f64, f64)> = rec.points.iter().map(|p| (p.n as f64, p.count as f64)).collect();
    let fill: Vec<f64> = pts.iter().map(|(n, c)| c / n).collect();
    assert!(fill.windows(2).all(|w| w[1] > w[0]) && fill[2] > 0.95, "{fill:?}");
    let local: Vec<f64> = pts.windows(2).map(|w| (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln()).collect();
    assert!(local[1] < local[0] && local[1] >= 1.0 && local[1] < 1.05, "{local:?}");
}

#[test]
fn slope_targets_follow_config() {
    let rec = run(&small(ExperimentKind::WeylScan)).unwrap().record;
    let delta = 3f64.ln() / 5f64.ln();
    assert!((rec.targets.delta - delta).abs() < 1e-15);
    assert!((rec.targets.one_minus_delta - (1.0 - delta)).abs() < 1e-15);
    assert_eq!(rec.targets.s, 2.0);
    assert!((rec.targets.s_one_minus_delta - 2.0 * (1.0 - delta)).abs() < 1e-15);
}

#[test]
fn sidecar_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&small(ExperimentKind::DeltaZero)).unwrap();
    let written = write_outputs(&out, dir.path()).unwrap();
    let meta = read_metadata(written.last().unwrap()).unwrap();
    assert_eq!(meta.record, out.record);
    assert_eq!(meta.record.library_version, env!("CARGO_PKG_VERSION"));
    assert_eq!(meta.record.config_hash, out.record.config.hash());
    assert_eq!(meta.csv_files, vec!["delta_zero.csv".to_string(), "delta_zero_spectrum.csv".to_string()]);
    assert_eq!(meta.timings.len(), out.timings.len());
}

#[test]
fn config_hash_tracks_content() {
    let a = small(ExperimentKind::WeylScan);
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.seed += 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn eigvec_dump_small() {
    let out = run(&small(ExperimentKind::Eigvec)).unwrap();
    let rep = out.record.eigvec.clone().unwrap();
    assert!(rep.residual <= 1e-8, "{}", rep.residual);
    assert!((rep.norm - 1.0).abs() < 1e-12);
    let profile = &out.profiles[0].abs_values;
    assert_eq!(profile.len(), 64);
    let mass: f64 = profile.iter().map(|a| a * a).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    assert!((rep.exponent - (-rep.abs.ln() / 4f64.ln())).abs() < 1e-12);
}

#[test]
fn identity_run_small() {
    let rec = run(&small(ExperimentKind::VerifyIdentity)).unwrap().record;
    assert_eq!(rec.identity.len(), 1);
    let r = rec.identity[0];
    assert!(r.residual <= 1e-8 && r.modified_residual <= 1e-8);
    assert!(r.remainder_norm <= 0.5);
    assert!(r.rank_a as f64 <= r.rank_bound);
    assert!(rec.failures.is_empty());
}

fn baker(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_baker")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_success_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = baker(&["spectrum", "--K-list", "8", "--base", "3", "--alphabet", "0,2", "--tau", "0.1", "--out", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("wrote"));
    let meta = read_metadata(&dir.path().join("spectrum.json")).unwrap();
    assert_eq!(meta.record.config.k_list, vec![8]);
    assert_eq!(meta.record.config.alphabet, vec![0, 2]);
    assert_eq!(meta.record.config.output_dir, dir.path());
}

#[test]
fn cli_config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"K_list": [12], "seed": 99}"#).unwrap();
    let out = dir.path().join("o");
    let (code, _, err) = baker(&[
        "spectrum",
        "--K-list",
        "20",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let meta = read_metadata(&out.join("spectrum.json")).unwrap();
    assert_eq!(meta.record.config.k_list, vec![12]);
    assert_eq!(meta.record.config.seed, 99);
}

#[test]
fn cli_precondition_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(baker(&["weyl-scan", "--K-list", "10", "--out", out]).0, 1);
    assert_eq!(baker(&["nu-scan", "--K-list", "10", "--nu-list", "1.0", "--out", out]).0, 1);
    assert_eq!(baker(&["delta-zero", "--alphabet", "0,1", "--out", out]).0, 1);
    assert_eq!(baker(&["spectrum", "--tau", "0.9", "--out", out]).0, 1);
    assert_eq!(baker(&["spectrum", "--config", "/nonexistent/cfg.json", "--out", out]).0, 1);
    assert_eq!(baker(&["frobnicate"]).0, 1);
    assert_eq!(baker(&["--help"]).0, 0);
}

#[test]
fn cli_write_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let (code, _, _) = baker(&["spectrum", "--K-list", "6", "--out", blocker.to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn cli_eigvec_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, err) = baker(&["eigvec", "--K-list", "16", "--rank", "3", "--out", out]);
    assert_eq!(code, 0, "{err}");
    assert!(!stdout.is_empty());
    let mut reader = csv::Reader::from_path(dir.path().join("eigvec.csv")).unwrap();
    let mass: f64 = reader.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap().powi(2)).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

