//! Single-letter alphabet: the leading eigenvalues decay geometrically and
//! settle as N grows.

use open_baker::experiments::{run, ExperimentConfig, ExperimentKind};

fn main() -> open_baker::Result<()> {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::DeltaZero, false);
    cfg.k_list = vec![27, 81, 243];
    let rec = run(&cfg)?.record;
    for d in &rec.decay {
        let top: Vec<String> = d.top_abs.iter().map(|x| format!("{x:.6}")).collect();
        let r2 = d.fit.map_or(f64::NAN, |f| f.r2);
        println!("N={:<4} top |λ|: {}  (ln|λ_k| linear fit r² {r2:.4})", d.n, top.join(" "));
    }
    for c in &rec.cross_n {
        println!("N={} vs N={}: max |Δ| = {:.2e}", c.n_small, c.n_large, c.max_abs_diff);
    }
    Ok(())
}
