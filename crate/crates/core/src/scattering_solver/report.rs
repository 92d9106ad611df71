//! Weighted distance to the asymptotic profile and two-route comparison.

use serde::Serialize;

use super::TimeSampledField;
use crate::error::{Error, Result};
use crate::final_data::FinalState;
use crate::profile::{Profile, ProfileParams};
use crate::spectral_core::{l2_norm, RealField};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceSample {
    pub t: f64,
    /// `‖u - u_ap‖_{L²}`.
    pub err: f64,
    /// `t^d·‖u - u_ap‖_{L²}`.
    pub weighted: f64,
    /// `‖u - A‖_{L²}`.
    pub err_a: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub samples: Vec<ConvergenceSample>,
    pub d: f64,
    /// Largest weighted error over the samples.
    pub sup_weighted: f64,
}

impl ConvergenceReport {
    /// Largest over smallest weighted error.
    pub fn band_ratio(&self) -> f64 {
        let min = self.samples.iter().map(|s| s.weighted).fold(f64::INFINITY, f64::min);
        self.sup_weighted / min
    }

    /// Last weighted error over the first.
    pub fn growth(&self) -> f64 {
        self.samples[self.samples.len() - 1].weighted / self.samples[0].weighted
    }
}

/// Compares `u` with `u_ap` and with `A = u_ap + v_ap` at every sample, each
/// on the sample's own grid. `pp.d` sets the weight.
pub fn convergence_report(u: &TimeSampledField, fs: &FinalState, pp: &ProfileParams) -> Result<ConvergenceReport> {
    let profile = Profile::new(fs, pp)?;
    let mut samples = Vec::with_capacity(u.len());
    for (t, f) in u.iter() {
        let (u_ap, v_ap) = profile.sample_uv(t, *f.grid())?;
        let diff = f.sub(&u_ap)?;
        let err = l2_norm(&diff);
        let err_a = l2_norm(&diff.sub(&v_ap)?);
        samples.push(ConvergenceSample { t, err, weighted: t.powf(pp.d) * err, err_a });
    }
    let sup_weighted = samples.iter().map(|s| s.weighted).fold(0.0, f64::max);
    Ok(ConvergenceReport { samples, d: pp.d, sup_weighted })
}

/// `‖u₁ - u₂‖_{L²}` at one time, with the reference scale used by the
/// agreement criterion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RouteAgreement {
    pub t: f64,
    pub diff: f64,
    /// `‖u - u_ap‖_{L²}` of the second route.
    pub scale: f64,
}

impl RouteAgreement {
    pub fn relative(&self) -> f64 {
        self.diff / self.scale
    }
}

/// Brings `f` onto `target`'s grid by repeated central cropping.
fn crop_to(f: &RealField, target: &RealField) -> Result<RealField> {
    let mut g = f.clone();
    while g.grid().n() > target.grid().n() {
        g = g.crop_half()?;
    }
    g.ensure_same_grid(target)?;
    Ok(g)
}

/// Compares two solutions at their common sample times. Either may have
/// been cropped; the larger box is cropped to the smaller one.
pub fn route_agreement(
    a: &TimeSampledField,
    b: &TimeSampledField,
    fs: &FinalState,
    pp: &ProfileParams,
) -> Result<Vec<RouteAgreement>> {
    let profile = Profile::new(fs, pp)?;
    let mut out = Vec::new();
    for (t, fb) in b.iter() {
        let Some(fa) = a.at(t) else { continue };
        let (fa, fb) = if fa.grid().n() >= fb.grid().n() {
            (crop_to(fa, fb)?, fb.clone())
        } else {
            (fa.clone(), crop_to(fb, fa)?)
        };
        let u_ap = profile.sample_u_ap(t, *fb.grid())?;
        out.push(RouteAgreement {
            t,
            diff: l2_norm(&fa.sub(&fb)?),
            scale: l2_norm(&fb.sub(&u_ap)?),
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("the two solutions share no sample time".into()));
    }
    Ok(out)
}
