//! Free and modified-free waves synthesized from the closed-form transform
//! of the final data, and the calibration of the transform constant `κ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::final_data::{Component, FinalState};
use crate::profile::{Profile, ProfileParams, PsiMode};
use crate::residual_lab::GridPolicy;
use crate::spectral_core::{kg_linear_step, l2_norm, Complex64, Fft2, Grid2D, RealField};

/// Unnormalized `∫e^{-ix·ξ}φ dx` of one component.
fn raw_transform(fs: &FinalState, which: Component, xi: [f64; 2]) -> Complex64 {
    fs.atoms(which).iter().fold(Complex64::default(), |acc, a| {
        let (re, im) = a.transform(xi);
        acc + Complex64::new(re, im)
    })
}

/// The modified free wave and its time derivative at time `t`:
/// in Fourier space
/// `X₋e^{-i(tω+Ψ(ξ)log t)} + X₊e^{i(tω+Ψ(-ξ)log t)}` with
/// `X∓ = (φ̂₀ ± iφ̂₁/ω)/2`, where `Ψ` is the profile's effective phase.
///
/// With `Ψ ≡ 0` this is exactly the free evolution of `(φ₀, φ₁)` from `t = 0`.
/// Its stationary-phase asymptotics reproduce `u_ap`, phase correction
/// included.
pub fn modified_free(profile: &Profile, t: f64, grid: Grid2D) -> Result<(RealField, RealField)> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::TimeOutOfRange { t, reason: "modified free wave needs t > 1".into() });
    }
    let fs = profile.final_state();
    let n = grid.n();
    let k = grid.wavenumbers();
    let log_t = t.ln();
    let scale = 1.0 / (grid.length() * grid.length());
    let mut z = vec![Complex64::default(); grid.len()];
    z.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            let xi = [k[i], k[j]];
            let w = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let f0 = raw_transform(fs, Component::Phi0, xi);
            let f1 = raw_transform(fs, Component::Phi1, xi);
            let i_f1 = Complex64::new(-f1.im, f1.re) / w;
            let xm = 0.5 * (f0 + i_f1);
            let xp = 0.5 * (f0 - i_f1);
            let psi_m = profile.effective_psi(xi);
            let psi_p = profile.effective_psi([-xi[0], -xi[1]]);
            let em = Complex64::from_polar(1.0, -(t * w + psi_m * log_t));
            let ep = Complex64::from_polar(1.0, t * w + psi_p * log_t);
            let u = xm * em + xp * ep;
            let ut = xm * em * Complex64::new(0.0, -(w + psi_m / t))
                + xp * ep * Complex64::new(0.0, w + psi_p / t);
            let parity = (grid.mode_index(i) + grid.mode_index(j)).rem_euclid(2);
            let sign = if parity == 0 { scale } else { -scale };
            *out = (u + Complex64::new(-ut.im, ut.re)) * sign;
        }
    });
    Fft2::for_size(n).inverse(&mut z);
    let u = RealField::from_vec(grid, z.iter().map(|c| c.re).collect())?;
    let ut = RealField::from_vec(grid, z.iter().map(|c| c.im).collect())?;
    Ok((u, ut))
}

/// Exact free evolution of the sampled data `(φ₀, φ₁)` from `t = 0`.
pub fn free_evolution(fs: &FinalState, t: f64, grid: Grid2D) -> Result<(RealField, RealField)> {
    let phi0 = fs.sample(Component::Phi0, grid);
    let phi1 = fs.sample(Component::Phi1, grid);
    kg_linear_step(&phi0, &phi1, t)
}

/// Transform constants tried by [`calibrate_kappa`].
pub const KAPPA_CANDIDATES: [f64; 6] = [
    1.0,
    -1.0,
    1.0 / (2.0 * PI),
    -1.0 / (2.0 * PI),
    1.0 / (4.0 * PI * PI),
    -1.0 / (4.0 * PI * PI),
];

/// One time of the calibration run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaSample {
    pub t: f64,
    /// Least-squares `κ` matching the leading term to the free solution.
    pub kappa_fit: f64,
    /// `‖leading term‖_{L²}` at the selected `κ`.
    pub lead_norm: f64,
    /// `t·‖v_lin - leading term‖_{L²}` at the selected `κ`.
    pub weighted_error: f64,
    pub grid_n: usize,
    pub box_l: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaCalibration {
    pub samples: Vec<KappaSample>,
    /// Candidate nearest to the fitted values.
    pub kappa: f64,
    /// Weighted error at the last time over the first.
    pub decay_ratio: f64,
}

/// Leading term `t⁻¹(P₁cos s + Q₁sin s)` with the constant `κ`.
pub fn leading_term(fs: &FinalState, kappa: f64, t: f64, grid: Grid2D) -> Result<RealField> {
    let mut fk = fs.clone();
    fk.kappa = kappa;
    let pp = ProfileParams::for_state(&fk, 1.0).with_psi(PsiMode::Off);
    Profile::new(&fk, &pp)?.sample_u_ap(t, grid)
}

/// Fits `κ` by least squares at each time, snaps to the nearest candidate and
/// reports the weighted free-asymptotics error there.
pub fn calibrate_kappa(fs: &FinalState, times: &[f64], policy: &GridPolicy) -> Result<KappaCalibration> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("calibration needs at least one time".into()));
    }
    if fs.is_zero() {
        return Err(Error::DegenerateAmplitude);
    }
    let mut fits = Vec::with_capacity(times.len());
    for &t in times {
        let grid = policy.grid_for(t, fs)?;
        let (v, _) = free_evolution(fs, t, grid)?;
        let unit = leading_term(fs, 1.0, t, grid)?;
        let num = v.inner(&unit)?;
        let den = unit.integrate_with(|x| x * x);
        fits.push((t, grid, v, unit, num / den));
    }
    let mean_fit = fits.iter().map(|f| f.4).sum::<f64>() / fits.len() as f64;
    let kappa = KAPPA_CANDIDATES
        .iter()
        .copied()
        .min_by(|a, b| (a - mean_fit).abs().total_cmp(&(b - mean_fit).abs()))
        .expect("nonempty");
    let samples: Vec<KappaSample> = fits
        .into_iter()
        .map(|(t, grid, v, unit, kappa_fit)| {
            let lead = unit.scale(kappa);
            KappaSample {
                t,
                kappa_fit,
                lead_norm: l2_norm(&lead),
                weighted_error: t * l2_norm(&v.sub(&lead).expect("same grid")),
                grid_n: grid.n(),
                box_l: grid.length(),
            }
        })
        .collect();
    let decay_ratio = samples[samples.len() - 1].weighted_error / samples[0].weighted_error;
    Ok(KappaCalibration { samples, kappa, decay_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::final_data::GaussianAtom;

    fn state() -> FinalState {
        FinalState::new(
            vec![GaussianAtom::new(0.3, [0.0, 0.0], 2.0).unwrap()],
            vec![GaussianAtom::new(0.15, [1.0, -0.5], 2.0).unwrap()],
            crate::final_data::KAPPA_CALIBRATED,
        )
        .unwrap()
    }

    #[test]
    fn unmodified_wave_is_free_evolution() {
        let fs = state();
        let pp = ProfileParams::for_state(&fs, 1.0).with_psi(PsiMode::Off);
        let profile = Profile::new(&fs, &pp).unwrap();
        let grid = Grid2D::new(128, 80.0).unwrap();
        let (u, ut) = modified_free(&profile, 20.0, grid).unwrap();
        let (v, vt) = free_evolution(&fs, 20.0, grid).unwrap();
        let scale = v.max_abs();
        assert!(u.sub(&v).unwrap().max_abs() < 1e-9 * scale);
        assert!(ut.sub(&vt).unwrap().max_abs() < 1e-9 * vt.max_abs());
    }

    #[test]
    fn time_derivative_matches_difference_quotient() {
        let fs = state();
        let profile = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
        let grid = Grid2D::new(128, 80.0).unwrap();
        let h = 1e-4;
        let (_, ut) = modified_free(&profile, 20.0, grid).unwrap();
        let (up, _) = modified_free(&profile, 20.0 + h, grid).unwrap();
        let (um, _) = modified_free(&profile, 20.0 - h, grid).unwrap();
        let fd = up.sub(&um).unwrap().scale(0.5 / h);
        assert!(fd.sub(&ut).unwrap().max_abs() < 1e-6 * ut.max_abs());
    }

    #[test]
    fn modified_wave_approaches_the_profile() {
        let fs = state();
        let profile = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
        let flipped = Profile::new(&fs, &ProfileParams::for_state(&fs, -1.0)).unwrap();
        let mut errs = Vec::new();
        for t in [40.0, 80.0] {
            let grid = Grid2D::for_box(2.5 * t, 1.0, 1024).unwrap();
            let (u, _) = modified_free(&profile, t, grid).unwrap();
            let lead = profile.sample_u_ap(t, grid).unwrap();
            let wrong = flipped.sample_u_ap(t, grid).unwrap();
            let err = l2_norm(&u.sub(&lead).unwrap()) / l2_norm(&lead);
            let err_wrong = l2_norm(&u.sub(&wrong).unwrap()) / l2_norm(&lead);
            assert!(err < 0.5 * err_wrong, "t = {t}: {err} vs {err_wrong}");
            errs.push(err);
        }
        assert!(errs[1] < 0.7 * errs[0], "{errs:?}");
    }
}
