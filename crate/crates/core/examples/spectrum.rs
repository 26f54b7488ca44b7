//! Trimmed spectrum of B_N and the counting function at a few ν.
//!
//! Usage: `cargo run --release --example spectrum [K]`

use open_baker::baker::build_trimmed;
use open_baker::spectral::{counting_function, eigenvalues};
use open_baker::BakerSpec;

fn main() -> open_baker::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(125);
    let spec = BakerSpec::with_tau(5, &[1, 2, 3], 0.05, k)?;
    let trimmed = build_trimmed(&spec);
    println!("M=5 A={{1,2,3}} tau=0.05 N={} trimmed dim={}", spec.n(), trimmed.matrix.rows());
    let spectrum = eigenvalues(&trimmed.matrix)?;
    println!("spectral radius {:.6}, max relative residual {:.1e}", spectrum.spectral_radius(), spectrum.max_relative_residual());
    for (i, z) in spectrum.sorted_by_modulus().iter().take(8).enumerate() {
        println!("  λ_{:<2} = {:+.6} {:+.6}i  |λ| = {:.6}", i + 1, z.re, z.im, z.norm());
    }
    for nu in [1.0, 1.5, 2.0, 3.0] {
        let c = counting_function(&spectrum, 5, nu)?;
        println!("  N({nu}) = #{{|λ| ≥ 5^-{nu}}} = {}", c.count);
    }
    Ok(())
}
