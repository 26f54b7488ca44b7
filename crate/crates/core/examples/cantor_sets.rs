//! Fattened Cantor sets X_j, their grid counts, and smooth and Gevrey gap
//! schedules with the rank bound they imply.

use open_baker::cantor::{default_mu, gevrey_schedule, smooth_schedule, ExpandingMap, FattenedCantorSet};
use open_baker::cutoff::{estimate_decay_envelope, EnvelopeKind};
use open_baker::make_cutoff;

fn main() -> open_baker::Result<()> {
    let map = ExpandingMap::new(3, &[0, 2])?;
    for level in 0..=4 {
        let set = FattenedCantorSet::build(&map, level, 0.25 * 3f64.powi(-(level as i32)))?;
        println!("X_{level}: {} arcs, measure {:.4}, {} of 729 grid points", set.arcs().len(), set.measure(), set.grid_count(729));
    }
    let chi = make_cutoff(0.1)?;
    let n = 2187;
    for l in [1e-3, 1.0] {
        let s = smooth_schedule(n, 3, 1.0, &chi, l)?;
        println!("smooth L={l}: ℓ={} valid={} rank bound {:.1}", s.ell, s.valid, s.rank_bound(2));
    }
    let env = estimate_decay_envelope(&chi, EnvelopeKind::Gevrey)?;
    let g = gevrey_schedule(n, 3, 1.0, env.order, default_mu(&env), env.rate, chi.support_distance_to_zero())?;
    println!("gevrey: ℓ={} d={:?} valid={}", g.ell, g.d.iter().map(|d| format!("{d:.1}")).collect::<Vec<_>>(), g.valid);
    Ok(())
}
