//! The final-state problem: the retarded operator `G`, the Picard iteration
//! `v = G[F - (N(v+A) - N(A))]`, an independent backward time stepper, and
//! the weighted convergence diagnostics.

mod closure;
mod evolve;
mod green;
mod picard;
mod report;

use serde::{Deserialize, Serialize};

pub use closure::{
    calibrate_kappa, free_evolution, leading_term, modified_free, KappaCalibration, KappaSample,
    KAPPA_CANDIDATES,
};
pub use evolve::{backward_evolve, final_data, EvolveSettings};
pub use green::{
    g_apply, g_apply_all, strichartz_diagnostic, tail_estimate, GApplied, GreenSweep, Propagator,
    SweepKernels,
};
pub use picard::{picard_solve, PicardReport, PicardSettings, PdeDefect};
pub use report::{convergence_report, route_agreement, ConvergenceReport, ConvergenceSample, RouteAgreement};

use crate::error::{Error, Result};
use crate::spectral_core::RealField;

/// Times of the diagnostic ladder for the scattering runs.
pub const SCATTER_LADDER: [f64; 7] = crate::residual_lab::DEFAULT_LADDER;

/// How the solution is pinned at `T_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalDataMode {
    /// `u(T_end) = A(T_end)`.
    Profile,
    /// `u(T_end) = u_mf(T_end) + v_ap(T_end)`, with `u_mf` the modified free
    /// wave; removes the `O(T_end⁻¹)` linear mismatch of `u_ap` at `T_end`.
    ModifiedFree,
}

/// Fields sampled at increasing times on one grid each.
///
/// Different samples may live on different grids (cropped boxes); all
/// fields of one sample share a grid.
#[derive(Debug, Clone)]
pub struct TimeSampledField {
    times: Vec<f64>,
    fields: Vec<RealField>,
}

impl TimeSampledField {
    pub fn new(times: Vec<f64>, fields: Vec<RealField>) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::InvalidParameter("times and fields differ in length".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidParameter("no samples".into()));
        }
        for (j, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!("times not increasing at index {j}")));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample time".into()));
        }
        Ok(TimeSampledField { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[RealField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The sample at time `t` (to `1e-9` relative).
    pub fn at(&self, t: f64) -> Option<&RealField> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|j| &self.fields[j])
    }

    /// All fields on one grid, as required by the quadrature routines.
    pub(crate) fn ensure_single_grid(&self) -> Result<()> {
        for f in &self.fields[1..] {
            self.fields[0].ensure_same_grid(f)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &RealField)> {
        self.times.iter().copied().zip(self.fields.iter())
    }
}
