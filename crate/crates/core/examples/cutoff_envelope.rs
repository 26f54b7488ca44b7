//! Builds the cutoff χ for a few τ, samples it, and fits Gevrey decay
//! envelopes to |χ̂|.

use open_baker::cutoff::{estimate_decay_envelope, EnvelopeKind};
use open_baker::make_cutoff;

fn main() -> open_baker::Result<()> {
    for tau in [0.05, 0.1, 0.2] {
        let chi = make_cutoff(tau)?;
        let samples: Vec<String> = [0.0, tau / 2.0, tau, 0.5].iter().map(|&x| format!("χ({x:.3})={:.6}", chi.eval(x))).collect();
        println!("tau={tau}: {}", samples.join("  "));
        println!("  d(supp χ, 0) = {:.3e}", chi.support_distance_to_zero());
        let env = estimate_decay_envelope(&chi, EnvelopeKind::Gevrey)?;
        println!("  |χ̂(ξ)| ≤ {:.3} exp(-{:.3} ξ^(1/{}))", env.scale, env.rate, env.order);
        for xi in [10.0, 100.0, 1000.0] {
            println!("  ξ={xi:>6}: |χ̂|={:.3e}  envelope={:.3e}", chi.fourier_abs(xi), env.eval(xi));
        }
    }
    Ok(())
}
