//! Selects the Fourier normalization `κ` by matching the leading asymptotic
//! term to the exact free evolution.

use kgscatter::final_data::{FinalState, GaussianAtom, KAPPA_PROVISIONAL};
use kgscatter::residual_lab::GridPolicy;
use kgscatter::scattering_solver::calibrate_kappa;

fn main() -> kgscatter::Result<()> {
    let fs = FinalState::new(
        vec![GaussianAtom::new(1.0, [0.0, 0.0], 1.0)?],
        vec![GaussianAtom::new(0.5, [1.0, -0.5], 1.5)?],
        KAPPA_PROVISIONAL,
    )?;
    let cal = calibrate_kappa(&fs, &[25.0, 50.0, 100.0, 200.0], &GridPolicy::default())?;
    println!("     t   kappa fit     |lead|      t|v_lin - lead|   grid");
    for s in &cal.samples {
        println!(
            "{:6.0}  {:+.6}  {:.4e}  {:.4e}        {} / {:.0}",
            s.t, s.kappa_fit, s.lead_norm, s.weighted_error, s.grid_n, s.box_l
        );
    }
    println!("selected kappa = {:.6} (-1/(2pi) = {:.6})", cal.kappa, -1.0 / (2.0 * std::f64::consts::PI));
    println!("weighted error, last over first = {:.4}", cal.decay_ratio);
    Ok(())
}
