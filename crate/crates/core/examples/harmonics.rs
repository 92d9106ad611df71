//! Per-harmonic cancellation: the residual of each corrector against its
//! source, and the decay of the remainders in `n`.

use kgscatter::final_data::{FinalState, GaussianAtom, KAPPA_CALIBRATED};
use kgscatter::profile::{Profile, ProfileParams};
use kgscatter::residual_lab::{harmonic_residuals, linear_fit, GridPolicy};

fn main() -> kgscatter::Result<()> {
    let t: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let fs = FinalState::new(
        vec![GaussianAtom::new(0.3, [0.0, 0.0], 2.0)?],
        vec![GaussianAtom::new(0.15, [1.0, -0.5], 2.0)?],
        KAPPA_CALIBRATED,
    )?;
    let profile = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0))?;
    let grid = GridPolicy::default().grid_for(t, &fs)?;
    let ns: Vec<u32> = (3..=21).step_by(2).collect();
    let rows = harmonic_residuals(&profile, t, grid, &ns)?;
    println!("t = {t}, grid {} / L = {}", grid.n(), grid.length());
    println!("  n   |source_n|    |R_n|        reduction");
    for r in &rows {
        println!("{:3}   {:.4e}   {:.4e}   {:.1}", r.n, r.without_corrector, r.with_corrector, r.reduction());
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| ((r.n as f64).ln(), r.with_corrector.ln())).unzip();
    println!("|R_n| ~ n^-p: p = {:.3}", -linear_fit(&x, &y).1);
    Ok(())
}
