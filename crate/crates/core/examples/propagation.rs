//! Propagates a random state forward and backward and reports how much of it
//! sits near the Cantor set after each step.

use open_baker::propagation::{concentration_region, mass_concentration, propagate_random, Direction};
use open_baker::BakerSpec;

fn main() -> open_baker::Result<()> {
    let spec = BakerSpec::with_tau(3, &[0, 2], 0.1, 729)?;
    let steps = 3;
    let region = concentration_region(&spec, steps)?;
    println!("N={} region holds {} of {} grid points", spec.n(), region.grid_count(spec.n()), spec.n());
    for dir in [Direction::Forward, Direction::Backward] {
        let states = propagate_random(&spec, steps, dir, 1)?;
        for (k, v) in states.iter().enumerate() {
            println!("{dir:?} k={}: ‖v‖={:.4} concentration={:.6}", k + 1, v.norm(), mass_concentration(v, &region));
        }
    }
    Ok(())
}
