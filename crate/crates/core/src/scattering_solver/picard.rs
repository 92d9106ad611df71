//! Picard iteration for `v = w + G[F - (N(v+A) - N(A))]`, where
//! `F = (□+1)A - N(A)` and `w` is the free wave carrying `v(T_end)`.
//!
//! Iterate `k+1` at node `τ_j` needs `v_k` only at nodes `≥ τ_j`, so every
//! iterate advances together in one backward sweep and no time history is
//! stored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::closure::modified_free;
use super::green::{add_spectra, sub_spectra, tail_estimate, uniform_step, GreenSweep, SweepKernels};
use super::{FinalDataMode, TimeSampledField};
use crate::decomposition::apply_n;
use crate::error::{Error, Result};
use crate::final_data::FinalState;
use crate::profile::{Profile, ProfileParams};
use crate::spectral_core::{
    dalembertian_plus_one_analytic, fields_pair, l2_norm, laplacian, spectra_pair, Grid2D, RealField,
    Spectrum,
};

/// Stop once an increment falls below this fraction of the first one.
const STOP_FRACTION: f64 = 1e-3;
/// `converged` requires the last contraction ratio at or below this.
const CONVERGED_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    pub t_start: f64,
    pub t_end: f64,
    /// Number of equal τ intervals on `[T, T_end]`.
    pub n_tau: usize,
    pub max_iter: usize,
    /// Times at which `v` is returned; each must be a τ node.
    pub sample_times: Vec<f64>,
    pub final_data: FinalDataMode,
}

impl PicardSettings {
    /// Checks the time window, the counts and that every sample time is a node.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start > std::f64::consts::E && self.t_end > self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "need e < T = {} < T_end = {}",
                self.t_start, self.t_end
            )));
        }
        if self.n_tau < 16 {
            return Err(Error::InvalidParameter(format!("n_tau = {} must be at least 16", self.n_tau)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParameter("no sample times".into()));
        }
        sample_indices(self, &self.nodes()).map(|_| ())
    }

    fn nodes(&self) -> Vec<f64> {
        let h = (self.t_end - self.t_start) / self.n_tau as f64;
        (0..=self.n_tau).map(|j| self.t_start + j as f64 * h).collect()
    }
}

/// `‖(□+1)u - λ|u|u‖_{L²}` for `u = A + v` at one interior sample time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PdeDefect {
    pub t: f64,
    pub residual: f64,
    /// Truncation-tail estimate of the final integrand.
    pub tail: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    /// Iterate at which the stopping rule was met, or `max_iter`.
    pub iterates: usize,
    /// `X(v_{k+1}-v_k)/X(v_k-v_{k-1})` up to `iterates`.
    pub contraction_ratios: Vec<f64>,
    /// `X(v_k - v_{k-1})` for every computed iterate, `v₀ = 0`.
    pub increments: Vec<f64>,
    /// `X(v)` of the returned iterate.
    pub x_norm_final: f64,
    pub converged: bool,
    /// `∫_{T_end}^∞` bound for the final integrand.
    pub tail_estimate: f64,
    pub pde_defects: Vec<PdeDefect>,
    pub n_tau: usize,
}

/// Running surrogate of `sup_t t^d(‖w‖_{H^{1/2}} + ‖w‖_{L⁴([t,T_end]×R²)})`.
#[derive(Debug, Clone, Copy, Default)]
struct XNorm {
    sup: f64,
    l4_integral: f64,
    last_l4: Option<f64>,
}

impl XNorm {
    /// Adds node `τ` (visited in decreasing order).
    fn push(&mut self, tau: f64, h: f64, d: f64, h_half: f64, l4_pow4: f64) {
        if let Some(prev) = self.last_l4 {
            self.l4_integral += 0.5 * h * (prev + l4_pow4);
        }
        self.last_l4 = Some(l4_pow4);
        let value = tau.powf(d) * (h_half + self.l4_integral.powf(0.25));
        self.sup = self.sup.max(value);
    }
}

fn l4_pow4(f: &RealField) -> f64 {
    f.integrate_with(|v| (v * v) * (v * v))
}

/// Spectra of several fields, two per transform.
fn spectra_of(fields: &[RealField]) -> Result<Vec<Spectrum>> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        match pair {
            [a, b] => {
                let (sa, sb) = spectra_pair(a, b)?;
                out.push(sa);
                out.push(sb);
            }
            [a] => out.push(a.spectrum()),
            _ => unreachable!(),
        }
    }
    Ok(out)
}

/// Fields of several spectra, two per transform.
fn fields_of(spectra: &[Spectrum]) -> Result<Vec<RealField>> {
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        match pair {
            [a, b] => {
                let (fa, fb) = fields_pair(a, b)?;
                out.push(fa);
                out.push(fb);
            }
            [a] => out.push(a.clone().to_field()),
            _ => unreachable!(),
        }
    }
    Ok(out)
}

/// `v(T_end)` and `∂_t v(T_end)` for the chosen final data.
fn closure_data(profile: &Profile, t_end: f64, grid: Grid2D, mode: FinalDataMode) -> Result<(RealField, RealField)> {
    match mode {
        FinalDataMode::Profile => Ok((RealField::zeros(grid), RealField::zeros(grid))),
        FinalDataMode::ModifiedFree => {
            let (u, ut) = modified_free(profile, t_end, grid)?;
            let (uj, _) = profile.sample_uv_jets(t_end, grid)?;
            Ok((u.sub(&uj.value)?, ut.sub(&uj.dt)?))
        }
    }
}

/// Index of each sample time among the nodes.
fn sample_indices(settings: &PicardSettings, nodes: &[f64]) -> Result<Vec<usize>> {
    let h = nodes[1] - nodes[0];
    settings
        .sample_times
        .iter()
        .map(|&t| {
            let q = (t - settings.t_start) / h;
            let j = q.round();
            if j < 0.0 || j as usize >= nodes.len() || (q - j).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!("sample time {t} is not a τ node")));
            }
            Ok(j as usize)
        })
        .collect()
}

/// Data kept near an interior sample time for the PDE check.
#[derive(Default)]
struct DefectProbe {
    /// `W_K` (the Duhamel part of the last iterate) at offsets `-2..=2`.
    duhamel: BTreeMap<i64, RealField>,
    /// `(□+1)A`, `A` and `v_K` at the sample time.
    centre: Option<(RealField, RealField, RealField)>,
}

/// Solves the final-state problem on `[T, T_end]` by Picard iteration.
///
/// Returns `v = u - A` at the sample times, from the last computed iterate.
/// Ratios are of the X-norm surrogate of successive increments.
pub fn picard_solve(
    fs: &FinalState,
    pp: &ProfileParams,
    settings: &PicardSettings,
    grid: Grid2D,
) -> Result<(TimeSampledField, PicardReport)> {
    settings.validate()?;
    let profile = Profile::new(fs, pp)?;
    let nodes = settings.nodes();
    let h = uniform_step(&nodes)?;
    let m = nodes.len() - 1;
    let samples = sample_indices(settings, &nodes)?;
    let kmax = settings.max_iter;
    let lambda = pp.lambda;
    let d = pp.d;

    let mut probes: BTreeMap<usize, DefectProbe> = samples
        .iter()
        .filter(|&&j| j >= 2 && j + 2 <= m)
        .map(|&j| (j, DefectProbe::default()))
        .collect();
    let probe_keys: Vec<usize> = probes.keys().copied().collect();
    // Probes `(centre, offset)` that need node `j`.
    let probe_at = |j: usize| -> Vec<(usize, i64)> {
        (-2i64..=2)
            .filter_map(|o| {
                let c = j as i64 - o;
                (c >= 0 && probe_keys.contains(&(c as usize))).then_some((c as usize, o))
            })
            .collect()
    };

    let kernels = SweepKernels::new(grid, h);
    let (w0, wt0) = closure_data(&profile, settings.t_end, grid, settings.final_data)?;
    let (mut w_hat, mut wt_hat) = spectra_pair(&w0, &wt0)?;
    let mut sweeps: Vec<GreenSweep> = (0..kmax).map(|_| GreenSweep::new(&kernels)).collect();
    let mut inc_norms = vec![XNorm::default(); kmax];
    let mut final_norm = XNorm::default();
    let mut out: BTreeMap<usize, RealField> = BTreeMap::new();
    let mut g_end_norm = 0.0;

    for j in (0..=m).rev() {
        let tau = nodes[j];
        let (uj, vj) = profile.sample_uv_jets(tau, grid)?;
        let a = uj.value.add(&vj.value)?;
        let box_a = dalembertian_plus_one_analytic(&a, &uj.dtt.add(&vj.dtt)?)?;
        let n_a = apply_n(&a, lambda);
        let f = box_a.sub(&n_a)?;

        let duhamel: Vec<Spectrum> = sweeps.iter_mut().map(|s| s.advance(&kernels)).collect();
        let v_hat: Vec<Spectrum> = duhamel.iter().map(|s| add_spectra(&w_hat, s)).collect();
        let v = fields_of(&v_hat)?;

        let mut g = Vec::with_capacity(kmax);
        g.push(f.clone());
        for vk in &v[..kmax - 1] {
            let n_va = apply_n(&vk.add(&a)?, lambda);
            g.push(f.sub(&n_va.sub(&n_a)?)?);
        }
        if j == m {
            g_end_norm = l2_norm(&g[kmax - 1]);
        }
        for (s, gh) in sweeps.iter_mut().zip(spectra_of(&g)?) {
            s.accept(gh);
        }

        for k in 0..kmax {
            let (inc_hat, inc) = if k == 0 {
                (v_hat[0].clone(), v[0].clone())
            } else {
                (sub_spectra(&duhamel[k], &duhamel[k - 1]), v[k].sub(&v[k - 1])?)
            };
            inc_norms[k].push(tau, h, d, inc_hat.sobolev_norm(0.5), l4_pow4(&inc));
        }
        let v_last = &v[kmax - 1];
        final_norm.push(tau, h, d, v_hat[kmax - 1].sobolev_norm(0.5), l4_pow4(v_last));

        if samples.contains(&j) {
            out.insert(j, v_last.clone());
        }
        for (centre, offset) in probe_at(j) {
            let probe = probes.get_mut(&centre).expect("probe exists");
            probe.duhamel.insert(offset, duhamel[kmax - 1].clone().to_field());
            if offset == 0 {
                probe.centre = Some((box_a.clone(), a.clone(), v_last.clone()));
            }
        }
        kernels.one.flow(&mut w_hat, &mut wt_hat);
    }

    let tail = tail_estimate(g_end_norm, settings.t_end, d);
    let mut pde_defects = Vec::new();
    for (&j, probe) in &probes {
        let (box_a, a, v_k) = probe.centre.as_ref().expect("centre recorded");
        let w = |o: i64| &probe.duhamel[&o];
        let inv = 1.0 / (12.0 * h * h);
        let lap = laplacian(w(0));
        let mut res = RealField::zeros(grid);
        let u = a.add(v_k)?;
        let n_u = apply_n(&u, lambda);
        res.data_mut().iter_mut().enumerate().for_each(|(i, r)| {
            let wtt = (-w(-2).data()[i] + 16.0 * w(-1).data()[i] - 30.0 * w(0).data()[i]
                + 16.0 * w(1).data()[i]
                - w(2).data()[i])
                * inv;
            *r = box_a.data()[i] + wtt - lap.data()[i] + w(0).data()[i] - n_u.data()[i];
        });
        pde_defects.push(PdeDefect { t: nodes[j], residual: l2_norm(&res), tail });
    }

    let increments: Vec<f64> = inc_norms.iter().map(|x| x.sup).collect();
    let (iterates, contraction_ratios, converged) = stopping(&increments)?;
    let report = PicardReport {
        iterates,
        contraction_ratios,
        increments,
        x_norm_final: final_norm.sup,
        converged,
        tail_estimate: tail,
        pde_defects,
        n_tau: settings.n_tau,
    };
    let (times, fields): (Vec<f64>, Vec<RealField>) = out.into_iter().map(|(j, f)| (nodes[j], f)).unzip();
    Ok((TimeSampledField::new(times, fields)?, report))
}

/// Applies the stopping rule to the increment norms: the first `k` with
/// `X_k < 1e-3·X_1`, ratios up to there, and divergence on two successive
/// ratios above one.
fn stopping(increments: &[f64]) -> Result<(usize, Vec<f64>, bool)> {
    let first = increments[0];
    if first == 0.0 {
        return Ok((1, Vec::new(), true));
    }
    let stop = increments
        .iter()
        .position(|&x| x < STOP_FRACTION * first)
        .map_or(increments.len(), |k| k + 1);
    let ratios: Vec<f64> = increments[..stop].windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.windows(2).any(|r| r[0] > 1.0 && r[1] > 1.0) {
        return Err(Error::Divergence { ratios });
    }
    let converged = ratios.last().map_or(true, |&r| r <= CONVERGED_RATIO);
    Ok((stop, ratios, converged))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopping_rule() {
        let (k, r, c) = stopping(&[1.0, 0.1, 0.01, 1e-4, 1e-6]).unwrap();
        assert_eq!(k, 4);
        assert_eq!(r.len(), 3);
        assert!(c);
        let (k, _, c) = stopping(&[1.0, 0.95, 0.93]).unwrap();
        assert_eq!(k, 3);
        assert!(!c);
        assert!(matches!(stopping(&[1.0, 2.0, 4.0]), Err(Error::Divergence { .. })));
        assert_eq!(stopping(&[0.0, 0.0]).unwrap(), (1, vec![], true));
    }
}
