//! Assembles the approximate inverse identity I = Z(B - λ) + R + A for a
//! smooth gap schedule and reports residuals, ‖R‖ and the rank of A.

use num_complex::Complex64;
use open_baker::cantor::smooth_schedule;
use open_baker::cutoff::{estimate_decay_envelope, EnvelopeKind};
use open_baker::propagation::{adaptive_smooth_identity, assemble_identity, localization_norms};
use open_baker::BakerSpec;

fn main() -> open_baker::Result<()> {
    let spec = BakerSpec::with_tau(3, &[0, 2], 0.1, 27)?;
    let env = estimate_decay_envelope(spec.chi(), EnvelopeKind::Gevrey)?;
    for lambda in [0.4, 0.7, 4.0] {
        let ad = adaptive_smooth_identity(&spec, 1.0, Complex64::new(lambda, 0.0))?;
        let p = &ad.parts;
        println!(
            "λ={lambda}: L={:.3} (after {} doublings) ℓ={} residual {:.1e} modified {:.1e} ‖R‖={:.3} rank A={} ≤ {:.1}",
            ad.l,
            ad.doublings,
            p.schedule.ell,
            p.residual().relative,
            p.modified_residual().relative,
            ad.remainder_norm,
            p.rank_a,
            p.schedule.rank_bound(2)
        );
    }
    let sched = smooth_schedule(spec.n(), 3, 1.0, spec.chi(), 1e-3)?;
    println!("schedule L=1e-3 valid={} d={:?}", sched.valid, sched.d);
    for c in localization_norms(&spec, &sched, &env)? {
        println!("  j={} ‖(1-A_j)BA_(j-1)‖={:.3e} envelope(d_j)={:.3e}", c.j, c.norm, c.envelope);
    }
    let parts = assemble_identity(&spec, &sched, Complex64::new(0.7, 0.0))?;
    println!("  ‖R‖={:.3e}", parts.remainder_norm());
    Ok(())
}
