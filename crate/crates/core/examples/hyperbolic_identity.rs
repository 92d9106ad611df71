//! The discrete `(□+1)` on hyperbolic waves `t^{-m}cos(nρ)`, `ρ = √(t²-|x|²)`,
//! against the closed form, and its second-order convergence in `h_t`.

use kgscatter::spectral_core::{check_identity, Grid2D, HyperbolicWave, Trig};

fn main() -> kgscatter::Result<()> {
    let t = 100.0;
    let grid = Grid2D::new(512, 1.6 * t)?;
    for (m, n) in [(1, 1.0), (2, 1.0), (1, 2.0), (2, 3.0)] {
        let wave = HyperbolicWave { m, n, trig: Trig::Cos };
        print!("m = {m}, n = {n}:");
        for h_t in [0.2, 0.1, 0.05, 1e-2, 1e-3] {
            let c = check_identity(&wave, t, h_t, grid)?;
            print!("  h_t = {h_t}: {:.2e}", c.relative());
        }
        println!();
    }
    Ok(())
}
