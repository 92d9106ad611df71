//! Residual norms of the corrected profile over the default time ladder,
//! with power-law fits per variant.

use kgscatter::final_data::{FinalState, GaussianAtom, KAPPA_CALIBRATED};
use kgscatter::profile::{Profile, ProfileParams};
use kgscatter::residual_lab::{
    rate_fit, run_ladder, series, GridPolicy, TimeDerivative, Variant, DEFAULT_LADDER,
};

fn main() -> kgscatter::Result<()> {
    let a: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let fs = FinalState::new(
        vec![GaussianAtom::new(a, [0.0, 0.0], 2.0)?],
        vec![GaussianAtom::new(0.5 * a, [1.0, -0.5], 2.0)?],
        KAPPA_CALIBRATED,
    )?;
    println!("y_norm = {:.4}", fs.y_norm()?);
    let pp = ProfileParams::for_state(&fs, 1.0);
    let profile = Profile::new(&fs, &pp)?;
    let samples = run_ladder(
        &profile,
        &DEFAULT_LADDER,
        &GridPolicy::default(),
        TimeDerivative::default(),
        &Variant::ALL,
    )?;
    for v in Variant::ALL {
        let s = series(&samples, v);
        let row: Vec<String> = s.iter().map(|(_, n)| format!("{n:.3e}")).collect();
        let f0 = rate_fit(&s, 0)?;
        let f2 = rate_fit(&s, 2)?;
        println!("{:>13}  p(q=0) = {:.3}  p(q=2) = {:.3}  [{}]", v.name(), f0.p, f2.p, row.join(" "));
    }
    Ok(())
}
