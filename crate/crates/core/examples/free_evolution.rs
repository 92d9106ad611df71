//! Exact free Klein-Gordon evolution of Gaussian data compared with the
//! leading `t⁻¹` asymptotic term; writes the last snapshot as a field file.

use std::path::PathBuf;

use kgscatter::final_data::{FinalState, GaussianAtom, KAPPA_CALIBRATED};
use kgscatter::io::{write_field, FieldMeta};
use kgscatter::residual_lab::GridPolicy;
use kgscatter::scattering_solver::{free_evolution, leading_term};
use kgscatter::spectral_core::{l2_norm, linear_energy};

fn main() -> kgscatter::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "free_t200.kgf".into()).into();
    let fs = FinalState::new(
        vec![GaussianAtom::new(1.0, [0.0, 0.0], 2.0)?],
        vec![GaussianAtom::new(0.5, [1.0, -0.5], 2.0)?],
        KAPPA_CALIBRATED,
    )?;
    let policy = GridPolicy::default();
    println!("     t   |v_lin|     energy      |v_lin - lead|   t|v_lin - lead|");
    let mut last = None;
    for t in [25.0, 50.0, 100.0, 200.0] {
        let grid = policy.grid_for(t, &fs)?;
        let (v, vt) = free_evolution(&fs, t, grid)?;
        let err = l2_norm(&v.sub(&leading_term(&fs, fs.kappa, t, grid)?)?);
        println!(
            "{t:6.0}  {:.4e}  {:.6e}  {err:.4e}       {:.4e}",
            l2_norm(&v),
            linear_energy(&v, &vt),
            t * err
        );
        last = Some((t, v));
    }
    let (t, v) = last.expect("nonempty");
    let mut meta = FieldMeta::new();
    meta.insert("name".into(), "v_lin".into());
    meta.insert("t".into(), t.to_string());
    meta.insert("kappa".into(), fs.kappa.to_string());
    write_field(&out, &v, &meta)?;
    println!("wrote {}", out.display());
    Ok(())
}
