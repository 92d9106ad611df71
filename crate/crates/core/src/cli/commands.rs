//! The five experiment families. Each writes its artifacts into `out` and
//! stamps them with the config hash and `κ`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::{Experiment, Route, RunConfig};
use crate::error::{Error, Result};
use crate::final_data::FinalState;
use crate::io::{ensure_dir, write_field, write_json, Csv, FieldMeta, Stamp};
use crate::profile::{
    corrector_coeff, fourier_coeff, fourier_coeff_quadrature, Profile, ProfileParams, PsiMode, C1,
};
use crate::residual_lab::{
    harmonic_residuals, linear_fit, psi_sign_check, rate_fit, run_ladder, series, GridPolicy, HarmonicResidual,
    PsiSignCheck, RateFit, Variant,
};
use crate::scattering_solver::{
    backward_evolve, calibrate_kappa, convergence_report, free_evolution, leading_term, picard_solve,
    route_agreement, ConvergenceReport, PicardReport, TimeSampledField,
};
use crate::spectral_core::{l2_norm, Grid2D, RealField};

/// Command-line adjustments applied on top of the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub ablate_psi: bool,
    pub variants: Option<Vec<String>>,
}

/// Applies the overrides, validates and dispatches.
pub fn run(experiment: Experiment, mut config: RunConfig, overrides: &Overrides, out: &Path) -> Result<()> {
    if let Some(v) = &overrides.variants {
        config.residuals.variants = v.clone();
    }
    if overrides.ablate_psi && experiment == Experiment::Residuals {
        config.residuals.variants.push(Variant::NoPsi.name().to_string());
    }
    config.validate_for(experiment)?;
    ensure_dir(out)?;
    let stamp = Stamp { config_hash: config.hash(), kappa: config.final_state.kappa };
    match experiment {
        Experiment::Coeffs => cmd_coeffs(&config, &stamp, out),
        Experiment::Residuals => cmd_residuals(&config, &stamp, out),
        Experiment::Scatter => cmd_scatter(&config, overrides.ablate_psi, &stamp, out),
        Experiment::CalibrateKappa => cmd_calibrate_kappa(&config, &stamp, out),
        Experiment::EvolveFree => cmd_evolve_free(&config, &stamp, out),
    }
}

fn dump(out: &Path, name: &str, t: f64, field: &RealField, stamp: &Stamp) -> Result<()> {
    let mut meta = FieldMeta::new();
    meta.insert("name".into(), name.into());
    meta.insert("t".into(), t.to_string());
    meta.insert("config_hash".into(), stamp.config_hash.clone());
    meta.insert("kappa".into(), stamp.kappa.to_string());
    write_field(&out.join(format!("{name}_t{t}.kgf")), field, &meta)
}

#[derive(Serialize)]
struct DecayFit {
    /// `p` in `|g_n| ≈ C·n^{-p}`.
    exponent: f64,
    n_range: [u32; 2],
}

#[derive(Serialize)]
struct CoeffsManifest {
    n_max: u32,
    c1: f64,
    c1_expected: f64,
    max_abs_diff: f64,
    parseval_sum: f64,
    parseval_target: f64,
    corrector_decay: DecayFit,
}

/// Writes `coeffs.csv` (n, c_closed, c_quad, abs_diff, parseval_partial, g_n)
/// and `coeffs.json`.
pub fn cmd_coeffs(config: &RunConfig, stamp: &Stamp, out: &Path) -> Result<()> {
    let n_max = config.coeffs.n_max;
    let mut csv = Csv::new(stamp, &["n", "c_closed", "c_quad", "abs_diff", "parseval_partial", "g_n"]);
    let (mut partial, mut max_diff) = (0.0, 0.0f64);
    for n in 1..=n_max {
        let c = fourier_coeff(n);
        let q = fourier_coeff_quadrature(n);
        partial += c * c;
        max_diff = max_diff.max((c - q).abs());
        csv.row(&[&n, &c, &q, &(c - q).abs(), &partial, &corrector_coeff(n)]);
    }
    csv.write(&out.join("coeffs.csv"))?;
    let [lo, hi] = config.coeffs.fit_range;
    let (x, y): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|n| n % 2 == 1)
        .map(|n| ((n as f64).ln(), corrector_coeff(n).abs().ln()))
        .unzip();
    let manifest = CoeffsManifest {
        n_max,
        c1: fourier_coeff(1),
        c1_expected: C1,
        max_abs_diff: max_diff,
        parseval_sum: partial,
        parseval_target: 0.75,
        corrector_decay: DecayFit { exponent: -linear_fit(&x, &y).1, n_range: [lo, hi] },
    };
    write_json(&out.join("coeffs.json"), stamp, &manifest)
}

/// Rate fits of one variant; absent when a norm vanishes.
#[derive(Serialize)]
struct VariantFits {
    /// `q = 0`: pure power law.
    power: Option<RateFit>,
    /// `q = 1`: one power of `log t`.
    power_log: Option<RateFit>,
}

#[derive(Serialize)]
struct ResidualsManifest<'a> {
    profile_params: ProfileParams,
    final_state: &'a FinalState,
    grid_policy: GridPolicy,
    ladder: &'a [f64],
    fits: BTreeMap<&'static str, VariantFits>,
    /// `max_t t^{1.75}‖(□+1)A - N(A)‖`, when `full_A` was run.
    eta: Option<f64>,
    harmonics: Vec<HarmonicResidual>,
    psi_sign: Option<PsiSignCheck>,
}

/// Writes `residuals.csv` (variant, t, l2, linf, grid_n, box_L, h_t) and
/// `residuals.json`.
pub fn cmd_residuals(config: &RunConfig, stamp: &Stamp, out: &Path) -> Result<()> {
    let fs = &config.final_state;
    let pp = config.profile_params();
    let policy = config.grid_policy();
    let variants = config.variants()?;
    let profile = Profile::new(fs, &pp)?;
    let samples = run_ladder(&profile, &config.ladder, &policy, config.derivative(), &variants)?;
    let mut csv = Csv::new(stamp, &["variant", "t", "l2", "linf", "grid_n", "box_L", "h_t"]);
    for s in &samples {
        csv.row(&[&s.variant.name(), &s.t, &s.l2, &s.linf, &s.grid_n, &s.box_l, &s.h_t]);
    }
    csv.write(&out.join("residuals.csv"))?;

    let mut fits = BTreeMap::new();
    for &v in &variants {
        let pts = series(&samples, v);
        let fit = |q| if pts.iter().all(|p| p.1 > 0.0) { rate_fit(&pts, q).ok() } else { None };
        fits.insert(v.name(), VariantFits { power: fit(0), power_log: fit(1) });
    }
    let eta = variants.contains(&Variant::FullA).then(|| {
        series(&samples, Variant::FullA).iter().map(|&(t, l2)| t.powf(1.75) * l2).fold(0.0, f64::max)
    });
    let harmonics = if fs.is_zero() || config.residuals.harmonics.is_empty() {
        Vec::new()
    } else {
        let t = config.residuals.harmonic_t;
        harmonic_residuals(&profile, t, policy.grid_resolving(t, &profile)?, &config.residuals.harmonics)?
    };
    let psi_sign = if pp.lambda < 0.0 && !fs.is_zero() && pp.psi_mode != PsiMode::Off {
        Some(psi_sign_check(fs, &pp, &config.ladder, &policy, config.derivative())?)
    } else {
        None
    };
    let manifest = ResidualsManifest {
        profile_params: pp,
        final_state: fs,
        grid_policy: policy,
        ladder: &config.ladder,
        fits,
        eta,
        harmonics,
        psi_sign,
    };
    write_json(&out.join("residuals.json"), stamp, &manifest)
}

#[derive(Serialize)]
struct RouteSummary {
    route: String,
    /// Max over min of the weighted error.
    band_ratio: f64,
    /// Last over first of the weighted error.
    growth: f64,
    report: ConvergenceReport,
}

impl RouteSummary {
    fn new(route: &str, report: ConvergenceReport) -> Self {
        RouteSummary { route: route.into(), band_ratio: report.band_ratio(), growth: report.growth(), report }
    }
}

#[derive(Serialize)]
struct ScatterManifest<'a> {
    profile_params: ProfileParams,
    final_state: &'a FinalState,
    grid_n: usize,
    box_l: f64,
    y_norm: f64,
    psi_sign: Option<PsiSignCheck>,
    routes: Vec<RouteSummary>,
    picard: Option<PicardReport>,
}

#[derive(Serialize)]
struct Divergence<'a> {
    error: String,
    contraction_ratios: &'a [f64],
}

/// Writes `convergence.csv` (route, t, err, weighted, err_a), `scatter.json`,
/// `picard.json` and `agreement.csv` (t, diff, scale, relative).
///
/// For `λ < 0` the phase convention is chosen by the residual sign check
/// and both measurements are recorded.
pub fn cmd_scatter(config: &RunConfig, ablate_psi: bool, stamp: &Stamp, out: &Path) -> Result<()> {
    let fs = &config.final_state;
    let mut pp = config.profile_params();
    let psi_sign = if pp.lambda < 0.0 && pp.psi_mode != PsiMode::Off && !fs.is_zero() {
        let check = psi_sign_check(fs, &pp, &config.ladder, &config.grid_policy(), config.derivative())?;
        pp.psi_mode = check.selected;
        Some(check)
    } else {
        None
    };
    let grid = config.solver_policy().grid_for(config.solver.t_end, fs)?;
    let route = config.solver.route;
    let mut routes = Vec::new();
    let mut csv = Csv::new(stamp, &["route", "t", "err", "weighted", "err_a"]);
    let mut record = |name: &str, u: &TimeSampledField, pp: &ProfileParams| -> Result<()> {
        let report = convergence_report(u, fs, pp)?;
        for s in &report.samples {
            csv.row(&[&name, &s.t, &s.err, &s.weighted, &s.err_a]);
        }
        routes.push(RouteSummary::new(name, report));
        Ok(())
    };

    let u_evolve = if route != Route::Picard {
        let u = backward_evolve(fs, &pp, &config.evolve_settings(), grid)?;
        record("evolve", &u, &pp)?;
        if ablate_psi {
            record("evolve_psi_off", &u, &pp.with_psi(PsiMode::Off))?;
        }
        Some(u)
    } else {
        None
    };

    let (u_picard, picard) = if route != Route::Evolve {
        match picard_solve(fs, &pp, &config.picard_settings(), grid) {
            Ok((v, report)) => {
                let profile = Profile::new(fs, &pp)?;
                let fields = v
                    .iter()
                    .map(|(t, f)| f.add(&profile.sample_a(t, grid)?))
                    .collect::<Result<Vec<_>>>()?;
                let u = TimeSampledField::new(v.times().to_vec(), fields)?;
                record("picard", &u, &pp)?;
                if ablate_psi {
                    record("picard_psi_off", &u, &pp.with_psi(PsiMode::Off))?;
                }
                (Some(u), Some(report))
            }
            Err(e @ Error::Divergence { .. }) => {
                let ratios = match &e {
                    Error::Divergence { ratios } => ratios.clone(),
                    _ => unreachable!(),
                };
                let doc = Divergence { error: e.to_string(), contraction_ratios: &ratios };
                write_json(&out.join("picard_divergence.json"), stamp, &doc)?;
                return Err(e);
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };
    csv.write(&out.join("convergence.csv"))?;

    if let Some(report) = &picard {
        write_json(&out.join("picard.json"), stamp, report)?;
    }
    if let (Some(a), Some(b)) = (&u_picard, &u_evolve) {
        let mut csv = Csv::new(stamp, &["t", "diff", "scale", "relative"]);
        for r in route_agreement(a, b, fs, &pp)? {
            csv.row(&[&r.t, &r.diff, &r.scale, &r.relative()]);
        }
        csv.write(&out.join("agreement.csv"))?;
    }
    if config.solver.dump_fields {
        for (name, u) in [("u_evolve", &u_evolve), ("u_picard", &u_picard)] {
            if let Some(u) = u {
                for (t, f) in u.iter() {
                    dump(out, name, t, f, stamp)?;
                }
            }
        }
    }
    let manifest = ScatterManifest {
        profile_params: pp,
        final_state: fs,
        grid_n: grid.n(),
        box_l: grid.length(),
        y_norm: fs.y_norm_on(grid),
        psi_sign,
        routes,
        picard,
    };
    write_json(&out.join("scatter.json"), stamp, &manifest)
}

/// Writes `kappa.csv` (t, kappa_fit, lead_norm, weighted_error, grid_n,
/// box_L) and `kappa.json`.
pub fn cmd_calibrate_kappa(config: &RunConfig, stamp: &Stamp, out: &Path) -> Result<()> {
    let cal = calibrate_kappa(&config.final_state, &config.calibration.times, &config.grid_policy())?;
    let mut csv = Csv::new(stamp, &["t", "kappa_fit", "lead_norm", "weighted_error", "grid_n", "box_L"]);
    for s in &cal.samples {
        csv.row(&[&s.t, &s.kappa_fit, &s.lead_norm, &s.weighted_error, &s.grid_n, &s.box_l]);
    }
    csv.write(&out.join("kappa.csv"))?;
    write_json(&out.join("kappa.json"), stamp, &cal)
}

/// Writes `free.csv` (t, l2_free, l2_lead, error, weighted_error, grid_n,
/// box_L): the free solution against its leading term at the configured `κ`.
pub fn cmd_evolve_free(config: &RunConfig, stamp: &Stamp, out: &Path) -> Result<()> {
    let fs = &config.final_state;
    let policy = config.grid_policy();
    let mut csv = Csv::new(stamp, &["t", "l2_free", "l2_lead", "error", "weighted_error", "grid_n", "box_L"]);
    for &t in &config.free.times {
        let grid: Grid2D = policy.grid_for(t, fs)?;
        let (v, _) = free_evolution(fs, t, grid)?;
        let lead = leading_term(fs, fs.kappa, t, grid)?;
        let err = l2_norm(&v.sub(&lead)?);
        csv.row(&[&t, &l2_norm(&v), &l2_norm(&lead), &err, &(t * err), &grid.n(), &grid.length()]);
        if config.free.dump_fields {
            dump(out, "v_lin", t, &v, stamp)?;
        }
    }
    csv.write(&out.join("free.csv"))
}
