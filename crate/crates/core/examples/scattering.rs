//! Solves the final-state problem for a small Gaussian state by both routes
//! and prints the weighted distance to the profile, with and without the
//! phase correction, the Picard contraction ratios and the route agreement.
//!
//! Usage: `scattering [amplitude] [n_tau] [dt]`; `n_tau = 0` skips the Picard route.

use std::time::Instant;

use kgscatter::final_data::{FinalState, GaussianAtom, KAPPA_CALIBRATED};
use kgscatter::profile::{Profile, ProfileParams, PsiMode};
use kgscatter::residual_lab::GridPolicy;
use kgscatter::scattering_solver::{
    backward_evolve, convergence_report, picard_solve, route_agreement, EvolveSettings, FinalDataMode,
    PicardSettings, TimeSampledField, SCATTER_LADDER,
};

fn main() -> kgscatter::Result<()> {
    let mut args = std::env::args().skip(1);
    let a: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let n_tau: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(700);
    let dt: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let fs = FinalState::new(
        vec![GaussianAtom::new(a, [0.0, 0.0], 2.0)?],
        vec![GaussianAtom::new(0.5 * a, [1.0, -0.5], 2.0)?],
        KAPPA_CALIBRATED,
    )?;
    let pp = ProfileParams::for_state(&fs, 1.0);
    let (t0, t1) = (SCATTER_LADDER[0], SCATTER_LADDER[SCATTER_LADDER.len() - 1]);
    let policy = GridPolicy { h_max: Some(1.0), ..GridPolicy::default() };
    let grid = policy.grid_for(t1, &fs)?;
    println!("y_norm = {:.4}, grid n = {}, L = {}", fs.y_norm()?, grid.n(), grid.length());

    let clock = Instant::now();
    let evolve = EvolveSettings {
        t_end: t1,
        t_start: t0,
        dt,
        sample_times: SCATTER_LADDER.to_vec(),
        final_data: FinalDataMode::ModifiedFree,
    };
    let u_evolve = backward_evolve(&fs, &pp, &evolve, grid)?;
    println!("backward evolution: {:.1} s", clock.elapsed().as_secs_f64());
    let with_psi = convergence_report(&u_evolve, &fs, &pp)?;
    let without = convergence_report(&u_evolve, &fs, &pp.with_psi(PsiMode::Off))?;
    println!("     t   |u-u_ap|   t^d|u-u_ap|   |u-A|   t^d|u-u_ap0|");
    for (s, z) in with_psi.samples.iter().zip(&without.samples) {
        println!(
            "{:6.0}  {:.3e}  {:.3e}  {:.3e}  {:.3e}",
            s.t, s.err, s.weighted, s.err_a, z.weighted
        );
    }
    println!("band ratio with psi = {:.3}, growth without psi = {:.3}", with_psi.band_ratio(), without.growth());

    if n_tau == 0 {
        return Ok(());
    }
    let clock = Instant::now();
    let settings = PicardSettings {
        t_start: t0,
        t_end: t1,
        n_tau,
        max_iter: 5,
        sample_times: SCATTER_LADDER.to_vec(),
        final_data: FinalDataMode::ModifiedFree,
    };
    let (v, report) = picard_solve(&fs, &pp, &settings, grid)?;
    println!("picard: {:.1} s", clock.elapsed().as_secs_f64());
    println!("increments {:?}", report.increments);
    println!("ratios {:?}, iterates {}, converged {}", report.contraction_ratios, report.iterates, report.converged);
    for p in &report.pde_defects {
        println!("pde defect t = {:.0}: {:.3e} (tail {:.3e})", p.t, p.residual, p.tail);
    }
    let profile = Profile::new(&fs, &pp)?;
    let u_picard = TimeSampledField::new(
        v.times().to_vec(),
        v.iter()
            .map(|(t, f)| f.add(&profile.sample_a(t, *f.grid())?))
            .collect::<kgscatter::Result<Vec<_>>>()?,
    )?;
    for r in route_agreement(&u_picard, &u_evolve, &fs, &pp)? {
        println!("agreement t = {:.0}: {:.3e} / {:.3e} = {:.4}", r.t, r.diff, r.scale, r.relative());
    }
    Ok(())
}
