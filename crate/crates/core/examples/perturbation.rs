//! Weyl exponents of B̃ + P for a random Gaussian P of prescribed norm.

use open_baker::experiments::{run, ExperimentConfig, ExperimentKind};

fn main() -> open_baker::Result<()> {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::Perturb, false);
    cfg.k_list = vec![50, 75, 100];
    cfg.nu_list = vec![1.0, 1.5];
    for norm in [1e-10, 1e-5, 1e-2] {
        cfg.perturbation_norm = norm;
        let rec = run(&cfg)?.record;
        let deltas: Vec<String> = rec.fits.iter().map(|f| format!("{:+.2e}", f.slope_delta.unwrap_or(f64::NAN))).collect();
        println!("‖P‖={norm:.0e}: slope changes {}", deltas.join(" "));
    }
    Ok(())
}
