//! Counting function over a small K grid and the fitted Weyl exponents,
//! compared with δ = log|A| / log M.

use open_baker::experiments::{run, ExperimentConfig, ExperimentKind};

fn main() -> open_baker::Result<()> {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::WeylScan, false);
    cfg.k_list = vec![50, 75, 100, 125];
    cfg.nu_list = vec![1.0, 1.2, 1.5];
    let rec = run(&cfg)?.record;
    for p in &rec.points {
        println!("K={:<4} N={:<4} nu={:.1} count={}", p.k, p.n, p.nu, p.count);
    }
    for f in &rec.fits {
        println!("nu={:.1}: slope {:.4} (r² {:.4})", f.nu.unwrap_or(f64::NAN), f.fit.slope, f.fit.r2);
    }
    println!("delta = {:.5}", rec.targets.delta);
    Ok(())
}
