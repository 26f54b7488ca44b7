//! Counting function at one N over a range of ν, with the log-log slope set
//! against 1 - δ and s(1 - δ).

use open_baker::experiments::{run, tenths, ExperimentConfig, ExperimentKind};

fn main() -> open_baker::Result<()> {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::NuScan, false);
    cfg.k_list = vec![125];
    cfg.nu_list = tenths(10, 30);
    let rec = run(&cfg)?.record;
    for p in &rec.points {
        println!("nu={:.1} count={} perturbed={:?}", p.nu, p.count, p.count_perturbed);
    }
    let fit = rec.fits[0];
    println!(
        "slope {:.4}; 1-delta {:.4}; s(1-delta) {:.4}",
        fit.fit.slope, rec.targets.one_minus_delta, rec.targets.s_one_minus_delta
    );
    Ok(())
}
