//! Error function of the corrected profile, lemma-wise residuals, time
//! ladders and decay-rate fits.

mod fit;

use serde::{Deserialize, Serialize};

pub use fit::{linear_fit, linear_slope, rate_fit, RateFit};

use crate::decomposition::apply_n;
use crate::error::{Error, Result};
use crate::final_data::{Component, FinalState};
use crate::profile::{FieldJet, Profile, ProfileParams, PsiMode};
use crate::spectral_core::{
    dalembertian_plus_one, dalembertian_plus_one_analytic, l2_norm, Grid2D, RealField,
};

/// Half-decade ladder used for rate fits.
pub const DEFAULT_LADDER: [f64; 7] = [50.0, 71.0, 100.0, 141.0, 200.0, 283.0, 400.0];

/// Top-octave spectral fraction above which a snapshot is rejected.
pub const ALIAS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `(□+1)A - N(A)`.
    FullA,
    /// `(□+1)u_ap - N_r`.
    UapVsNr,
    /// `(□+1)v_ap - N_nr`.
    VapVsNnr,
    /// `N(A) - N(u_ap)`.
    CrossTerm,
    /// `(□+1)u_ap - N(u_ap)`.
    UapVsFullN,
    /// `(□+1)u_ap - N(u_ap)` with the phase correction removed.
    NoPsi,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::FullA,
        Variant::UapVsNr,
        Variant::VapVsNnr,
        Variant::CrossTerm,
        Variant::UapVsFullN,
        Variant::NoPsi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::FullA => "full_A",
            Variant::UapVsNr => "uap_vs_Nr",
            Variant::VapVsNnr => "vap_vs_Nnr",
            Variant::CrossTerm => "cross_term",
            Variant::UapVsFullN => "uap_vs_fullN",
            Variant::NoPsi => "no_psi",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown residual variant '{s}'")))
    }
}

/// How `∂_t²` enters `(□+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeDerivative {
    /// Centred second difference with an absolute step.
    FiniteDifference { h_t: f64 },
    /// Exact differentiation of the closed-form profile.
    Analytic,
}

impl Default for TimeDerivative {
    fn default() -> Self {
        TimeDerivative::FiniteDifference { h_t: 1e-3 }
    }
}

impl TimeDerivative {
    pub fn step(&self) -> f64 {
        match self {
            TimeDerivative::FiniteDifference { h_t } => *h_t,
            TimeDerivative::Analytic => 0.0,
        }
    }
}

/// Box size and resolution per snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPolicy {
    /// `L = l_factor·t`.
    pub l_factor: f64,
    pub n_cap: usize,
    /// Largest admissible spacing; derived from the data when absent.
    #[serde(default)]
    pub h_max: Option<f64>,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy { l_factor: 2.5, n_cap: 2048, h_max: None }
    }
}

impl GridPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_factor >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "l_factor = {} must keep the cone inside the box (>= 2)",
                self.l_factor
            )));
        }
        if self.n_cap < 8 || !self.n_cap.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_cap = {} must be a power of two >= 8",
                self.n_cap
            )));
        }
        if let Some(h) = self.h_max {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("h_max must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn grid_for(&self, t: f64, fs: &FinalState) -> Result<Grid2D> {
        let h = self.h_max.unwrap_or_else(|| resolution_for(fs));
        Grid2D::for_box(self.l_factor * t, h, self.n_cap)
    }

    /// [`grid_for`](Self::grid_for), refined by doubling `n` until the top
    /// octave of `A(t)` holds at most `ALIAS_LIMIT / 100` of its energy or
    /// `n` reaches `n_cap`. At small `t` the envelope of `A` varies on the
    /// scale `t/⟨μ⟩³`, which the data-only spacing does not see. An explicit
    /// `h_max` is taken as is.
    pub fn grid_resolving(&self, t: f64, profile: &Profile) -> Result<Grid2D> {
        let mut grid = self.grid_for(t, profile.final_state())?;
        if self.h_max.is_some() {
            return Ok(grid);
        }
        while grid.n() < self.n_cap
            && profile.sample_a(t, grid)?.spectrum().top_octave_fraction() > 0.01 * ALIAS_LIMIT
        {
            grid = Grid2D::new(2 * grid.n(), grid.length())?;
        }
        Ok(grid)
    }
}

/// Spacing resolving `μ` up to where `|φ̂|·⟨μ⟩²` drops below `1e-8` of its
/// peak, with a factor two of margin so the top octave stays empty.
pub fn resolution_for(fs: &FinalState) -> f64 {
    let env = |k: f64| {
        let b2 = 1.0 + k * k;
        b2 * fs.ft_envelope(Component::Phi0, k) + b2.sqrt() * fs.ft_envelope(Component::Phi1, k)
    };
    let peak = (0..400).map(|j| env(j as f64 * 0.025)).fold(0.0, f64::max);
    if peak == 0.0 {
        return 1.0;
    }
    let mut k = 0.0;
    while env(k) > 1e-8 * peak && k < 1e3 {
        k += 0.01;
    }
    std::f64::consts::PI / (2.0 * k.max(0.5))
}

/// Rejects snapshots whose spectrum reaches the top octave.
pub fn check_aliasing(f: &RealField, limit: f64) -> Result<()> {
    let fraction = f.spectrum().top_octave_fraction();
    if fraction > limit {
        return Err(Error::Aliasing { fraction, limit });
    }
    Ok(())
}

/// Every residual field at one time.
#[derive(Debug, Clone)]
pub struct ResidualFields {
    pub t: f64,
    pub full_a: RealField,
    pub uap_vs_nr: RealField,
    pub vap_vs_nnr: RealField,
    /// `N(A) - N(u_ap)`.
    pub cross: RealField,
    pub uap_vs_full_n: RealField,
    /// `N_r + N_nr - N(u_ap)`, the series truncation.
    pub truncation: RealField,
    pub no_psi: Option<RealField>,
}

impl ResidualFields {
    pub fn field(&self, v: Variant) -> Option<&RealField> {
        match v {
            Variant::FullA => Some(&self.full_a),
            Variant::UapVsNr => Some(&self.uap_vs_nr),
            Variant::VapVsNnr => Some(&self.vap_vs_nnr),
            Variant::CrossTerm => Some(&self.cross),
            Variant::UapVsFullN => Some(&self.uap_vs_full_n),
            Variant::NoPsi => self.no_psi.as_ref(),
        }
    }
}

fn check_time(t: f64, deriv: TimeDerivative) -> Result<()> {
    if !(t > 1.0 + deriv.step()) {
        return Err(Error::TimeOutOfRange { t, reason: "residuals need t > 1 + h_t".into() });
    }
    Ok(())
}

/// `(□+1)u_ap` and `(□+1)v_ap`.
fn box_uv(profile: &Profile, t: f64, grid: Grid2D, deriv: TimeDerivative) -> Result<(RealField, RealField)> {
    match deriv {
        TimeDerivative::FiniteDifference { h_t } => {
            let (um, vm) = profile.sample_uv(t - h_t, grid)?;
            let (u0, v0) = profile.sample_uv(t, grid)?;
            let (up, vp) = profile.sample_uv(t + h_t, grid)?;
            Ok((
                dalembertian_plus_one(&um, &u0, &up, h_t)?,
                dalembertian_plus_one(&vm, &v0, &vp, h_t)?,
            ))
        }
        TimeDerivative::Analytic => {
            let (u, v) = profile.sample_uv_jets(t, grid)?;
            Ok((box_jet(&u)?, box_jet(&v)?))
        }
    }
}

fn box_jet(j: &FieldJet) -> Result<RealField> {
    dalembertian_plus_one_analytic(&j.value, &j.dtt)
}

/// All residual variants at one snapshot.
pub fn residual_fields(
    profile: &Profile,
    t: f64,
    grid: Grid2D,
    deriv: TimeDerivative,
    with_no_psi: bool,
) -> Result<ResidualFields> {
    check_time(t, deriv)?;
    let lambda = profile.params().lambda;
    let snap = profile.snapshot(t, grid)?;
    let a = snap.a();
    check_aliasing(&a, ALIAS_LIMIT)?;
    let (bu, bv) = box_uv(profile, t, grid, deriv)?;
    let n_u = apply_n(&snap.u_ap, lambda);
    let n_a = apply_n(&a, lambda);
    let full_a = bu.add(&bv)?.sub(&n_a)?;
    let uap_vs_nr = bu.sub(&snap.n_r)?;
    let vap_vs_nnr = bv.sub(&snap.n_nr)?;
    let cross = n_a.sub(&n_u)?;
    let uap_vs_full_n = bu.sub(&n_u)?;
    let truncation = snap.n_r.add(&snap.n_nr)?.sub(&n_u)?;
    let no_psi = if with_no_psi {
        let off = Profile::new(profile.final_state(), &profile.params().with_psi(PsiMode::Off))?;
        let (b0, _) = box_uv(&off, t, grid, deriv)?;
        let u0 = off.sample_u_ap(t, grid)?;
        Some(b0.sub(&apply_n(&u0, lambda))?)
    } else {
        None
    };
    Ok(ResidualFields { t, full_a, uap_vs_nr, vap_vs_nnr, cross, uap_vs_full_n, truncation, no_psi })
}

/// `F = (□+1)A - N(A)` with a finite-difference time step `h_t`.
pub fn error_function(fs: &FinalState, pp: &ProfileParams, t: f64, h_t: f64, grid: Grid2D) -> Result<RealField> {
    let deriv = TimeDerivative::FiniteDifference { h_t };
    check_time(t, deriv)?;
    let profile = Profile::new(fs, pp)?;
    let a = profile.sample_a(t, grid)?;
    check_aliasing(&a, ALIAS_LIMIT)?;
    let (bu, bv) = box_uv(&profile, t, grid, deriv)?;
    bu.add(&bv)?.sub(&apply_n(&a, pp.lambda))
}

/// `(□+1)u_ap - N_r(u_ap)`.
pub fn lemma42_residual(fs: &FinalState, pp: &ProfileParams, t: f64, h_t: f64, grid: Grid2D) -> Result<RealField> {
    let deriv = TimeDerivative::FiniteDifference { h_t };
    check_time(t, deriv)?;
    let profile = Profile::new(fs, pp)?;
    let snap = profile.snapshot(t, grid)?;
    check_aliasing(&snap.a(), ALIAS_LIMIT)?;
    let (bu, _) = box_uv(&profile, t, grid, deriv)?;
    bu.sub(&snap.n_r)
}

/// `(□+1)v_ap - N_nr(u_ap)`.
pub fn lemma43_residual(fs: &FinalState, pp: &ProfileParams, t: f64, h_t: f64, grid: Grid2D) -> Result<RealField> {
    let deriv = TimeDerivative::FiniteDifference { h_t };
    check_time(t, deriv)?;
    let profile = Profile::new(fs, pp)?;
    let snap = profile.snapshot(t, grid)?;
    check_aliasing(&snap.a(), ALIAS_LIMIT)?;
    let (_, bv) = box_uv(&profile, t, grid, deriv)?;
    bv.sub(&snap.n_nr)
}

/// `‖N(u_ap + v_ap) - N(u_ap)‖_{L²}`.
pub fn cross_term(fs: &FinalState, pp: &ProfileParams, t: f64, grid: Grid2D) -> Result<f64> {
    let profile = Profile::new(fs, pp)?;
    let (u, v) = profile.sample_uv(t, grid)?;
    let a = u.add(&v)?;
    Ok(l2_norm(&apply_n(&a, pp.lambda).sub(&apply_n(&u, pp.lambda))?))
}

/// One row of the residual table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub t: f64,
    pub variant: Variant,
    pub l2: f64,
    pub linf: f64,
    pub grid_n: usize,
    pub box_l: f64,
    pub h_t: f64,
}

/// Residual norms over a time ladder, sorted by variant then time.
pub fn run_ladder(
    profile: &Profile,
    times: &[f64],
    policy: &GridPolicy,
    deriv: TimeDerivative,
    variants: &[Variant],
) -> Result<Vec<ResidualSample>> {
    policy.validate()?;
    let with_no_psi = variants.contains(&Variant::NoPsi);
    let mut out = Vec::new();
    for &t in times {
        let grid = policy.grid_resolving(t, profile)?;
        let fields = residual_fields(profile, t, grid, deriv, with_no_psi)?;
        for &v in variants {
            let f = fields.field(v).expect("requested variant computed");
            out.push(ResidualSample {
                t,
                variant: v,
                l2: l2_norm(f),
                linf: f.max_abs(),
                grid_n: grid.n(),
                box_l: grid.length(),
                h_t: deriv.step(),
            });
        }
    }
    out.sort_by(|a, b| a.variant.cmp(&b.variant).then(a.t.total_cmp(&b.t)));
    Ok(out)
}

/// `(t, l2)` pairs of one variant.
pub fn series(samples: &[ResidualSample], v: Variant) -> Vec<(f64, f64)> {
    samples.iter().filter(|s| s.variant == v).map(|s| (s.t, s.l2)).collect()
}

/// Residual of one harmonic with and without its corrector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicResidual {
    pub n: u32,
    pub t: f64,
    /// `‖(□+1)(corrector_n) - source_n‖`, the remainder `R_n`.
    pub with_corrector: f64,
    /// `‖source_n‖`.
    pub without_corrector: f64,
}

impl HarmonicResidual {
    pub fn reduction(&self) -> f64 {
        self.without_corrector / self.with_corrector
    }
}

/// Spatial step of the pointwise Laplacian in [`harmonic_residuals`].
pub const HARMONIC_STEP: f64 = 1e-3;

/// Per-harmonic cancellation at odd `n ≥ 3`.
///
/// Evaluated pointwise at the grid nodes (exact in time, fine differences in
/// space), so harmonics that oscillate faster than the grid resolves are
/// still measured; the grid only sets the quadrature of the norms.
pub fn harmonic_residuals(profile: &Profile, t: f64, grid: Grid2D, ns: &[u32]) -> Result<Vec<HarmonicResidual>> {
    check_time(t, TimeDerivative::Analytic)?;
    if let Some(n) = ns.iter().find(|&&n| n < 3 || n % 2 == 0) {
        return Err(Error::InvalidParameter(format!("harmonic n = {n} must be odd and at least 3")));
    }
    ns.iter()
        .map(|&n| {
            let [r, source] = RealField::from_fn_multi(grid, |x, y| {
                [
                    profile.harmonic_remainder(n, t, [x, y], HARMONIC_STEP),
                    profile.source_term(n, t, [x, y]),
                ]
            });
            Ok(HarmonicResidual {
                n,
                t,
                with_corrector: l2_norm(&r),
                without_corrector: l2_norm(&source),
            })
        })
        .collect()
}

/// `‖(□+1)v_ap - N_nr‖` against `‖N_nr‖` with the series truncated at `n_max`.
pub fn truncated_cancellation(
    fs: &FinalState,
    pp: &ProfileParams,
    n_max: u32,
    t: f64,
    grid: Grid2D,
    deriv: TimeDerivative,
) -> Result<(f64, f64)> {
    let profile = Profile::new(fs, &pp.with_n_max(n_max))?;
    let snap = profile.snapshot(t, grid)?;
    let (_, bv) = box_uv(&profile, t, grid, deriv)?;
    Ok((l2_norm(&bv.sub(&snap.n_nr)?), l2_norm(&snap.n_nr)))
}

/// The resonant residual `‖(□+1)u_ap - N_r‖` under both phase conventions.
///
/// For `λ < 0` the literal phase and `λ·Ψ` differ; the convention whose
/// residual decays faster is the one that cancels the resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSignCheck {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub literal: Vec<f64>,
    pub coupling_scaled: Vec<f64>,
    /// Fitted decay exponents (`q = 0`).
    pub literal_rate: f64,
    pub coupling_scaled_rate: f64,
    pub selected: PsiMode,
}

pub fn psi_sign_check(
    fs: &FinalState,
    pp: &ProfileParams,
    times: &[f64],
    policy: &GridPolicy,
    deriv: TimeDerivative,
) -> Result<PsiSignCheck> {
    let measure = |mode: PsiMode| -> Result<Vec<f64>> {
        let profile = Profile::new(fs, &pp.with_psi(mode))?;
        let samples = run_ladder(&profile, times, policy, deriv, &[Variant::UapVsNr])?;
        Ok(samples.iter().map(|s| s.l2).collect())
    };
    let literal = measure(PsiMode::Literal)?;
    let coupling_scaled = measure(PsiMode::CouplingScaled)?;
    let rate = |v: &[f64]| -> Result<f64> {
        let pts: Vec<(f64, f64)> = times.iter().copied().zip(v.iter().copied()).collect();
        Ok(rate_fit(&pts, 0)?.p)
    };
    let literal_rate = rate(&literal)?;
    let coupling_scaled_rate = rate(&coupling_scaled)?;
    let selected = if coupling_scaled_rate >= literal_rate {
        PsiMode::CouplingScaled
    } else {
        PsiMode::Literal
    };
    Ok(PsiSignCheck {
        lambda: pp.lambda,
        times: times.to_vec(),
        literal,
        coupling_scaled,
        literal_rate,
        coupling_scaled_rate,
        selected,
    })
}
