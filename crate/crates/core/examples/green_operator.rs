//! The retarded operator `G` on a decaying source: the defect
//! `(□+1)G[g] = -g`, the quadrature tail and the Strichartz sides.

use kgscatter::scattering_solver::{g_apply, g_apply_all, strichartz_diagnostic, TimeSampledField};
use kgscatter::spectral_core::{dalembertian_plus_one, l2_norm, Grid2D, RealField};

fn main() -> kgscatter::Result<()> {
    let grid = Grid2D::new(64, 40.0)?;
    let d = 0.75;
    let (t0, h, m) = (10.0, 0.05, 400);
    let times: Vec<f64> = (0..=m).map(|j| t0 + j as f64 * h).collect();
    let g = |t: f64| {
        RealField::from_fn(grid, |x, y| (-(x * x + y * y) / 8.0).exp() * (1.7 * t).cos() * t.powf(-1.0 - d))
    };
    let source = TimeSampledField::new(times.clone(), times.iter().map(|&t| g(t)).collect())?;
    let w = g_apply_all(&source)?;
    println!("     t   |G[g]|      |(□+1)G[g] + g| / |g|");
    for j in (20..m - 20).step_by(60) {
        let fd = dalembertian_plus_one(&w.fields()[j - 1], &w.fields()[j], &w.fields()[j + 1], h)?;
        let defect = l2_norm(&fd.add(&source.fields()[j])?) / l2_norm(&source.fields()[j]);
        println!("{:6.2}  {:.4e}  {:.2e}", times[j], l2_norm(&w.fields()[j]), defect);
    }
    let direct = g_apply(&source, times[100], d)?;
    println!(
        "direct sum vs recursion at t = {}: {:.2e}; tail estimate {:.3e}",
        times[100],
        l2_norm(&direct.field.sub(&w.fields()[100])?),
        direct.tail
    );
    let (lhs, rhs) = strichartz_diagnostic(&source, 4)?;
    println!("Strichartz (4,4): |G g|_(L4 L4) = {lhs:.4e}, |<D>^(-1/2) g|_(L1 L2) = {rhs:.4e}, ratio {:.3}", lhs / rhs);
    Ok(())
}
