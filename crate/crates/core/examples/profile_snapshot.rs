//! Samples the corrected profile `A = u_ap + v_ap` and its resonant and
//! nonresonant sources at one time, prints norms and writes field files.

use std::path::PathBuf;

use kgscatter::final_data::{FinalState, GaussianAtom, KAPPA_CALIBRATED};
use kgscatter::io::{read_field, write_field, FieldMeta};
use kgscatter::profile::{Profile, ProfileParams};
use kgscatter::residual_lab::GridPolicy;
use kgscatter::spectral_core::l2_norm;

fn main() -> kgscatter::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| ".".into()).into();
    let t = 100.0;
    let fs = FinalState::new(
        vec![GaussianAtom::new(0.3, [0.0, 0.0], 2.0)?],
        vec![GaussianAtom::new(0.15, [1.0, -0.5], 2.0)?],
        KAPPA_CALIBRATED,
    )?;
    let pp = ProfileParams::for_state(&fs, 1.0);
    let profile = Profile::new(&fs, &pp)?;
    let grid = GridPolicy::default().grid_for(t, &fs)?;
    let snap = profile.snapshot(t, grid)?;
    println!("t = {t}, grid {} x {}, L = {}, delta_cone = {:.4}", grid.n(), grid.n(), grid.length(), pp.delta_cone);
    for (name, f) in [("u_ap", &snap.u_ap), ("v_ap", &snap.v_ap), ("n_r", &snap.n_r), ("n_nr", &snap.n_nr)] {
        println!("{name:>5}: L2 = {:.4e}, sup = {:.4e}", l2_norm(f), f.max_abs());
        let mut meta = FieldMeta::new();
        meta.insert("name".into(), name.into());
        meta.insert("t".into(), t.to_string());
        let path = dir.join(format!("{name}_t{t}.kgf"));
        write_field(&path, f, &meta)?;
        let (back, _) = read_field(&path)?;
        assert_eq!(back.data(), f.data());
    }
    println!("wrote four field files to {}", dir.display());
    Ok(())
}
