//! The run configuration: one TOML file, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::final_data::{FinalState, GaussianAtom, KAPPA_CALIBRATED};
use crate::io::sha256_hex;
use crate::profile::{auto_delta_cone, ProfileParams, PsiMode};
use crate::residual_lab::{GridPolicy, TimeDerivative, Variant, DEFAULT_LADDER};
use crate::scattering_solver::{EvolveSettings, FinalDataMode, PicardSettings};

/// Experiment families, one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Coeffs,
    Residuals,
    Scatter,
    CalibrateKappa,
    EvolveFree,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Coeffs => "coeffs",
            Experiment::Residuals => "residuals",
            Experiment::Scatter => "scatter",
            Experiment::CalibrateKappa => "calibrate-kappa",
            Experiment::EvolveFree => "evolve-free",
        }
    }
}

/// Profile parameters; `delta_cone` is fitted to the data when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub lambda: f64,
    pub d: f64,
    pub n_max: u32,
    pub delta_cone: Option<f64>,
    pub psi_mode: PsiMode,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection { lambda: 1.0, d: 0.75, n_max: 41, delta_cone: None, psi_mode: PsiMode::CouplingScaled }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub l_factor: f64,
    pub n_cap: usize,
    pub h_max: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridPolicy::default();
        GridSection { l_factor: g.l_factor, n_cap: g.n_cap, h_max: g.h_max }
    }
}

/// How `∂_t²` is taken in the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    FiniteDifference,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualSection {
    /// Variant names as in the CSV; `no_psi` is also added by `--ablate-psi`.
    pub variants: Vec<String>,
    pub derivative: DerivativeKind,
    /// Step of the centred time difference.
    pub h_t: f64,
    /// Odd harmonics `n ≥ 3` whose corrector cancellation is measured.
    pub harmonics: Vec<u32>,
    pub harmonic_t: f64,
}

impl Default for ResidualSection {
    fn default() -> Self {
        ResidualSection {
            variants: Variant::ALL
                .iter()
                .filter(|v| **v != Variant::NoPsi)
                .map(|v| v.name().to_string())
                .collect(),
            derivative: DerivativeKind::FiniteDifference,
            h_t: 1e-3,
            harmonics: (3..=21).step_by(2).collect(),
            harmonic_t: 100.0,
        }
    }
}

/// Which solver routes the scatter experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Both,
    Picard,
    Evolve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub t_start: f64,
    pub t_end: f64,
    /// Number of uniform `τ` panels of the Picard quadrature.
    pub n_tau: usize,
    /// Step of the backward evolution.
    pub dt: f64,
    pub max_iter: usize,
    pub final_data: FinalDataMode,
    pub route: Route,
    /// Grid spacing of the solver box, overriding the grid section.
    pub h_max: Option<f64>,
    pub dump_fields: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            t_start: 50.0,
            t_end: 400.0,
            n_tau: 700,
            dt: 0.25,
            max_iter: 5,
            final_data: FinalDataMode::ModifiedFree,
            route: Route::Both,
            h_max: Some(1.0),
            dump_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub times: Vec<f64>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection { times: vec![50.0, 100.0, 200.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreeSection {
    pub times: Vec<f64>,
    pub dump_fields: bool,
}

impl Default for FreeSection {
    fn default() -> Self {
        FreeSection { times: vec![50.0, 100.0, 200.0], dump_fields: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoeffsSection {
    pub n_max: u32,
    /// Odd-`n` window of the corrector decay fit.
    pub fit_range: [u32; 2],
}

impl Default for CoeffsSection {
    fn default() -> Self {
        CoeffsSection { n_max: 201, fit_range: [5, 101] }
    }
}

/// Everything a run needs. Absent sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// When set, must name the subcommand being run.
    pub experiment: Option<Experiment>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Snapshot times of the residual ladder and the solver reports.
    pub ladder: Vec<f64>,
    pub final_state: FinalState,
    pub profile: ProfileSection,
    pub grid: GridSection,
    pub residuals: ResidualSection,
    pub solver: SolverSection,
    pub calibration: CalibrationSection,
    pub free: FreeSection,
    pub coeffs: CoeffsSection,
}

impl Default for RunConfig {
    /// The calibrated small-data run: a centred Gaussian in `φ₀` and an
    /// offset one in `φ₁`, `λ = 1`.
    fn default() -> Self {
        let a = 0.01;
        RunConfig {
            experiment: None,
            out_dir: None,
            seed: 0,
            ladder: DEFAULT_LADDER.to_vec(),
            final_state: FinalState {
                phi0: vec![GaussianAtom { a, x0: [0.0, 0.0], sigma: 2.0 }],
                phi1: vec![GaussianAtom { a: 0.5 * a, x0: [1.0, -0.5], sigma: 2.0 }],
                kappa: KAPPA_CALIBRATED,
            },
            profile: ProfileSection::default(),
            grid: GridSection::default(),
            residuals: ResidualSection::default(),
            solver: SolverSection::default(),
            calibration: CalibrationSection::default(),
            free: FreeSection::default(),
            coeffs: CoeffsSection::default(),
        }
    }
}

fn parse_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(parse_error)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(parse_error)
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        sha256_hex(json.as_bytes())
    }

    pub fn profile_params(&self) -> ProfileParams {
        let p = &self.profile;
        ProfileParams {
            lambda: p.lambda,
            d: p.d,
            n_max: p.n_max,
            delta_cone: p.delta_cone.unwrap_or_else(|| auto_delta_cone(&self.final_state)),
            psi_mode: p.psi_mode,
        }
    }

    pub fn grid_policy(&self) -> GridPolicy {
        GridPolicy { l_factor: self.grid.l_factor, n_cap: self.grid.n_cap, h_max: self.grid.h_max }
    }

    /// The residual grid policy with the solver spacing substituted.
    pub fn solver_policy(&self) -> GridPolicy {
        GridPolicy { h_max: self.solver.h_max.or(self.grid.h_max), ..self.grid_policy() }
    }

    pub fn derivative(&self) -> TimeDerivative {
        match self.residuals.derivative {
            DerivativeKind::FiniteDifference => TimeDerivative::FiniteDifference { h_t: self.residuals.h_t },
            DerivativeKind::Analytic => TimeDerivative::Analytic,
        }
    }

    pub fn variants(&self) -> Result<Vec<Variant>> {
        let mut out = Vec::new();
        for name in &self.residuals.variants {
            let v = Variant::parse(name)?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no residual variants selected".into()));
        }
        Ok(out)
    }

    /// Ladder times inside the solver window.
    pub fn solver_times(&self) -> Vec<f64> {
        self.ladder
            .iter()
            .copied()
            .filter(|&t| t >= self.solver.t_start && t <= self.solver.t_end)
            .collect()
    }

    pub fn evolve_settings(&self) -> EvolveSettings {
        EvolveSettings {
            t_end: self.solver.t_end,
            t_start: self.solver.t_start,
            dt: self.solver.dt,
            sample_times: self.solver_times(),
            final_data: self.solver.final_data,
        }
    }

    pub fn picard_settings(&self) -> PicardSettings {
        PicardSettings {
            t_start: self.solver.t_start,
            t_end: self.solver.t_end,
            n_tau: self.solver.n_tau,
            max_iter: self.solver.max_iter,
            sample_times: self.solver_times(),
            final_data: self.solver.final_data,
        }
    }

    /// Checks every precondition `experiment` relies on, before any compute.
    pub fn validate_for(&self, experiment: Experiment) -> Result<()> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(Error::Config(format!(
                    "config selects experiment '{}' but '{}' was requested",
                    e.name(),
                    experiment.name()
                )));
            }
        }
        self.final_state.validate()?;
        self.profile_params().validate()?;
        self.grid_policy().validate()?;
        let increasing = |name: &str, ts: &[f64], min_len: usize| -> Result<()> {
            if ts.len() < min_len {
                return Err(Error::Config(format!("{name} needs at least {min_len} times")));
            }
            if ts.iter().any(|t| !(t.is_finite() && *t > 1.0)) || ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(format!("{name} times must be finite, > 1 and strictly increasing")));
            }
            Ok(())
        };
        match experiment {
            Experiment::Coeffs => {
                let [lo, hi] = self.coeffs.fit_range;
                if self.coeffs.n_max < 1 || !(lo >= 1 && lo < hi && hi <= self.coeffs.n_max) {
                    return Err(Error::Config("coeffs: need 1 <= fit_range[0] < fit_range[1] <= n_max".into()));
                }
            }
            Experiment::Residuals => {
                increasing("ladder", &self.ladder, 4)?;
                self.variants()?;
                if let DerivativeKind::FiniteDifference = self.residuals.derivative {
                    if !(self.residuals.h_t > 0.0) {
                        return Err(Error::Config("residuals.h_t must be positive".into()));
                    }
                }
                if self.residuals.harmonics.iter().any(|n| n % 2 == 0 || *n < 3) {
                    return Err(Error::Config("residuals.harmonics must be odd and at least 3".into()));
                }
                increasing("residuals.harmonic_t", &[self.residuals.harmonic_t], 1)?;
            }
            Experiment::Scatter => {
                increasing("ladder", &self.ladder, 1)?;
                if let Some(h) = self.solver.h_max {
                    if !(h > 0.0) {
                        return Err(Error::Config("solver.h_max must be positive".into()));
                    }
                }
                if self.solver_times().is_empty() {
                    return Err(Error::Config("no ladder time lies in the solver window".into()));
                }
                if self.solver.route != Route::Picard {
                    self.evolve_settings().validate()?;
                }
                if self.solver.route != Route::Evolve {
                    self.picard_settings().validate()?;
                }
                if self.profile.lambda < 0.0 && self.profile.psi_mode != PsiMode::Off {
                    increasing("ladder (phase sign check)", &self.ladder, 4)?;
                }
            }
            Experiment::CalibrateKappa => {
                increasing("calibration", &self.calibration.times, 1)?;
                if self.final_state.is_zero() {
                    return Err(Error::Config("calibration needs nonzero final data".into()));
                }
            }
            Experiment::EvolveFree => increasing("free", &self.free.times, 1)?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sede = 1"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("[solver]\nn_taus = 3").is_err());
        assert!(RunConfig::from_toml("[final_state]\nphi0 = [{ a = 1, x0 = [0, 0], sigma = 1, b = 2 }]").is_err());
    }

    #[test]
    fn hash_ignores_output_directory_only() {
        let c = RunConfig::default();
        let mut d = c.clone();
        d.out_dir = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 7;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn validation_catches_bad_settings() {
        let c = RunConfig::default();
        for e in [
            Experiment::Coeffs,
            Experiment::Residuals,
            Experiment::Scatter,
            Experiment::CalibrateKappa,
            Experiment::EvolveFree,
        ] {
            c.validate_for(e).unwrap();
        }
        let mut bad = c.clone();
        bad.solver.dt = 0.3;
        assert!(bad.validate_for(Experiment::Scatter).is_err());
        let mut bad = c.clone();
        bad.solver.n_tau = 701;
        assert!(bad.validate_for(Experiment::Scatter).is_err());
        let mut bad = c.clone();
        bad.ladder = vec![50.0, 40.0, 100.0, 200.0];
        assert!(bad.validate_for(Experiment::Residuals).is_err());
        let mut bad = c.clone();
        bad.profile.d = 0.4;
        assert!(bad.validate_for(Experiment::Coeffs).is_err());
        let mut bad = c.clone();
        bad.experiment = Some(Experiment::Scatter);
        assert!(bad.validate_for(Experiment::Residuals).is_err());
        let mut bad = c;
        bad.residuals.variants = vec!["full_b".into()];
        assert!(bad.validate_for(Experiment::Residuals).is_err());
    }
}
