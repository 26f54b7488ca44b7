//! One-step propagation: ‖φ B ψ‖ for ψ kept a distance r away from
//! Φ⁻¹(supp φ), as N grows.

use open_baker::dft::{circle_distance, GridFunction};
use open_baker::propagation::{fourier_one_step_norm, nonstationary_sum, one_step_norm};
use open_baker::{make_cutoff, BakerSpec};

fn main() -> open_baker::Result<()> {
    let chi = make_cutoff(0.05)?;
    let n = 500;
    for a in [1, 10, 50, 100, 250] {
        println!("|Σ e(am/N) χ(m/N)| at N={n}, a={a:<3}: {:.3e}", nonstationary_sum(&chi, n, a)?.norm());
    }
    let r = 0.02;
    for k in [27, 81, 243, 729] {
        let spec = BakerSpec::new(3, &[0, 2], chi, k)?;
        let n = spec.n();
        let phi = GridFunction::indicator(n, |j| (0.1..=0.2).contains(&(j as f64 / n as f64)));
        let pre = [(0.1 / 3.0, 0.2 / 3.0), (2.1 / 3.0, 2.2 / 3.0)];
        let psi = GridFunction::indicator(n, |j| {
            let x = j as f64 / n as f64;
            pre.iter().all(|&(lo, hi)| !(lo..=hi).contains(&x) && circle_distance(x, lo).min(circle_distance(x, hi)) >= r)
        });
        let a = one_step_norm(&spec, &phi, &psi)?.value;
        let b = fourier_one_step_norm(&spec, &phi, &psi)?.value;
        println!("N={n:<5} Nr={:<6.1} ‖φBψ‖={a:.3e}  ‖ψ^F B φ^F‖={b:.3e}", n as f64 * r);
    }
    Ok(())
}
