//! Backward Strang splitting for `(□+1)u = λ|u|u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closure::modified_free;
use super::{FinalDataMode, TimeSampledField};
use crate::error::{Error, Result};
use crate::final_data::FinalState;
use crate::profile::{Profile, ProfileParams};
use crate::spectral_core::{kg_linear_step, Grid2D, RealField};

/// Largest admissible growth of `t·‖u‖_{L∞}` relative to `T_end`.
const BLOW_UP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSettings {
    pub t_end: f64,
    pub t_start: f64,
    pub dt: f64,
    /// Times at which the solution is recorded; must lie on the step lattice.
    pub sample_times: Vec<f64>,
    pub final_data: FinalDataMode,
}

impl EvolveSettings {
    /// Checks the window and that every sample time lies on the step lattice.
    pub fn validate(&self) -> Result<()> {
        self.record_mask().map(|_| ())
    }

    /// Marks the steps to record, indexed backward from `T_end`.
    fn record_mask(&self) -> Result<Vec<bool>> {
        let steps = self.steps()?;
        let mut record = vec![false; steps + 1];
        for &t in &self.sample_times {
            if t < self.t_start - 1e-9 || t > self.t_end + 1e-9 {
                return Err(Error::TimeOutOfRange { t, reason: "sample time outside [T, T_end]".into() });
            }
            let i = lattice_index(self.t_end - t, self.dt)
                .ok_or_else(|| Error::InvalidParameter(format!("sample time {t} is off the step lattice")))?;
            record[i] = true;
        }
        Ok(record)
    }

    /// Number of steps, after checking that `dt` divides the span.
    fn steps(&self) -> Result<usize> {
        if !(self.t_start > 1.0 && self.t_end > self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "need 1 < T = {} < T_end = {}",
                self.t_start, self.t_end
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        lattice_index(self.t_end - self.t_start, self.dt)
            .ok_or_else(|| Error::InvalidParameter("dt must divide T_end - T".into()))
    }
}

/// `span/dt` when it is an integer to rounding.
fn lattice_index(span: f64, dt: f64) -> Option<usize> {
    let q = span / dt;
    let r = q.round();
    ((q - r).abs() <= 1e-9 * q.max(1.0)).then_some(r as usize)
}

/// `(u, u_t)` at `T_end`; `∂_t` is taken analytically.
pub fn final_data(
    profile: &Profile,
    t_end: f64,
    grid: Grid2D,
    mode: FinalDataMode,
) -> Result<(RealField, RealField)> {
    let (uj, vj) = profile.sample_uv_jets(t_end, grid)?;
    match mode {
        FinalDataMode::Profile => Ok((uj.value.add(&vj.value)?, uj.dt.add(&vj.dt)?)),
        FinalDataMode::ModifiedFree => {
            let (u, ut) = modified_free(profile, t_end, grid)?;
            Ok((u.add(&vj.value)?, ut.add(&vj.dt)?))
        }
    }
}

/// `u_t += h·λ|u|u`.
fn kick(u: &RealField, ut: &mut RealField, h: f64, lambda: f64) {
    ut.data_mut()
        .par_iter_mut()
        .zip(u.data().par_iter())
        .for_each(|(v, &x)| *v += h * lambda * x.abs() * x);
}

/// Integrates backward from `T_end` to `T` by Strang splitting: exact linear
/// half steps around a pointwise kick, consecutive half steps merged.
///
/// Returns `u` at the requested sample times in increasing order.
pub fn backward_evolve(
    fs: &FinalState,
    pp: &ProfileParams,
    settings: &EvolveSettings,
    grid: Grid2D,
) -> Result<TimeSampledField> {
    let record = settings.record_mask()?;
    let steps = record.len() - 1;
    let dt = settings.dt;
    let profile = Profile::new(fs, pp)?;
    let (mut u, mut ut) = final_data(&profile, settings.t_end, grid, settings.final_data)?;
    u.check_finite()?;
    ut.check_finite()?;
    let reference = settings.t_end * u.max_abs();
    let h = -dt;
    let lambda = pp.lambda;
    let mut out: Vec<(f64, RealField)> = Vec::new();
    if record[0] {
        out.push((settings.t_end, u.clone()));
    }
    let mut half_pending = false;
    for i in 1..=steps {
        let t = settings.t_end - i as f64 * dt;
        let lin = if half_pending { h } else { 0.5 * h };
        (u, ut) = kg_linear_step(&u, &ut, lin)?;
        kick(&u, &mut ut, h, lambda);
        half_pending = true;
        if reference > 0.0 {
            let growth = t * u.max_abs() / reference;
            if !(growth <= BLOW_UP_FACTOR) {
                return Err(Error::BlowUp { t, growth });
            }
        }
        if record[i] || i == steps {
            (u, ut) = kg_linear_step(&u, &ut, 0.5 * h)?;
            half_pending = false;
            if record[i] {
                out.push((t, u.clone()));
            }
        }
    }
    out.reverse();
    let (times, fields) = out.into_iter().unzip();
    TimeSampledField::new(times, fields)
}
