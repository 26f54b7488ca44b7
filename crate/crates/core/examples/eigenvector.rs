//! Fourier profile of the eigenvector for the rank-th largest |λ|.
//!
//! Usage: `cargo run --release --example eigenvector [K] [rank]`

use open_baker::experiments::{run, ExperimentConfig, ExperimentKind};

fn main() -> open_baker::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::Eigvec, false);
    cfg.k_list = vec![args.next().and_then(|s| s.parse().ok()).unwrap_or(256)];
    cfg.rank = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let out = run(&cfg)?;
    let e = out.record.eigvec.clone().expect("eigenvector report");
    println!("rank {}: λ = {:.6}, |λ| = M^-{:.4}, residual {:.1e}", e.rank, e.lambda, e.exponent, e.residual);
    if let Some(w) = &e.warning {
        println!("warning: {w}");
    }
    let profile = &out.profiles[0].abs_values;
    let n = profile.len();
    // Coarse text plot of |F_N v| in 32 bins.
    let bins = 32;
    for b in 0..bins {
        let chunk = &profile[b * n / bins..(b + 1) * n / bins];
        let mass: f64 = chunk.iter().map(|a| a * a).sum();
        println!("{:>5.3} {}", b as f64 / bins as f64, "#".repeat((mass * 200.0).round() as usize));
    }
    Ok(())
}
