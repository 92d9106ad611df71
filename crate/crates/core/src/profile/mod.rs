//! Hyperbolic coordinates, amplitude and phase functions, and the corrected
//! asymptotic profile `A = u_ap + v_ap`.

mod coeffs;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use coeffs::{
    corrector_coeff, fourier_coeff, fourier_coeff_quadrature, gauss_legendre, partial_series,
};

use crate::error::{Error, Result};
use crate::final_data::{Component, FinalState};
use crate::jet::{Jet, Scalar};
use crate::spectral_core::{Grid2D, RealField};

/// Resonant coefficient `c₁ = 8/(3π)`.
pub const C1: f64 = 8.0 / (3.0 * PI);

/// How the phase correction depends on the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    /// `Ψ` exactly as the closed form, independent of `λ`.
    Literal,
    /// `λ·Ψ`; coincides with `Literal` for `λ = 1`.
    CouplingScaled,
    /// `Ψ ≡ 0`, the unmodified free profile.
    Off,
}

/// Coupling, decay target and truncation shared by every profile evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    pub lambda: f64,
    pub d: f64,
    pub n_max: u32,
    pub delta_cone: f64,
    pub psi_mode: PsiMode,
}

impl ProfileParams {
    /// Defaults with the cone cutoff fitted to `fs`.
    pub fn for_state(fs: &FinalState, lambda: f64) -> Self {
        ProfileParams {
            lambda,
            d: 0.75,
            n_max: 41,
            delta_cone: auto_delta_cone(fs),
            psi_mode: PsiMode::CouplingScaled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // `λ = 0` is admitted: it gives the free profile and the linear flow.
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("coupling lambda must be finite".into()));
        }
        if !(self.d > 0.5 && self.d < 1.0) {
            return Err(Error::InvalidParameter(format!("d = {} must lie in (1/2, 1)", self.d)));
        }
        if self.n_max < 3 || self.n_max % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "n_max = {} must be odd and at least 3",
                self.n_max
            )));
        }
        if !(self.delta_cone > 0.0 && self.delta_cone < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_cone = {} must lie in (0, 1)",
                self.delta_cone
            )));
        }
        Ok(())
    }

    pub fn with_psi(self, psi_mode: PsiMode) -> Self {
        ProfileParams { psi_mode, ..self }
    }

    pub fn with_n_max(self, n_max: u32) -> Self {
        ProfileParams { n_max, ..self }
    }

    fn psi_factor(&self) -> f64 {
        match self.psi_mode {
            PsiMode::Literal => 1.0,
            PsiMode::CouplingScaled => self.lambda,
            PsiMode::Off => 0.0,
        }
    }
}

/// `μ = x/√(t²-|x|²)` and `⟨μ⟩`, or `inside = false` past the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicCoords {
    pub mu: [f64; 2],
    pub bracket: f64,
    pub inside: bool,
}

pub fn hyperbolic(t: f64, x: [f64; 2], delta_cone: f64) -> Result<HyperbolicCoords> {
    if !(t > 0.0) {
        return Err(Error::TimeOutOfRange { t, reason: "hyperbolic coordinates need t > 0".into() });
    }
    Ok(match hyperbolic_generic(t, x, delta_cone) {
        Some((mu, bracket, _)) => HyperbolicCoords { mu, bracket, inside: true },
        None => HyperbolicCoords { mu: [0.0; 2], bracket: 1.0, inside: false },
    })
}

/// `(μ, ⟨μ⟩, s)` with `s = √(t²-|x|²)`.
#[inline]
fn hyperbolic_generic<S: Scalar>(t: S, x: [f64; 2], delta_cone: f64) -> Option<([S; 2], S, S)> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let rc = t.value() * (1.0 - delta_cone);
    if r2 >= rc * rc {
        return None;
    }
    let s = (t * t - r2).sqrt();
    let inv = s.recip();
    Some(([inv * x[0], inv * x[1]], t * inv, s))
}

/// `(P₁, Q₁)` at `μ`.
pub fn p1_q1(fs: &FinalState, mu: [f64; 2]) -> (f64, f64) {
    let b = (1.0 + mu[0] * mu[0] + mu[1] * mu[1]).sqrt();
    amplitudes(fs, mu, b)
}

#[inline]
fn amplitudes<S: Scalar>(fs: &FinalState, mu: [S; 2], b: S) -> (S, S) {
    let (r0, i0) = fs.ft_phi_generic(Component::Phi0, mu);
    let (r1, i1) = fs.ft_phi_generic(Component::Phi1, mu);
    let b2 = b * b;
    (-(b2 * i0) - b * r1, b2 * r0 - b * i1)
}

/// `Ψ(μ) = -(4/(3π))⟨μ⟩|φ̂₀(μ) + i⟨μ⟩⁻¹φ̂₁(μ)|`, without any coupling factor.
pub fn psi(fs: &FinalState, mu: [f64; 2]) -> f64 {
    let b = (1.0 + mu[0] * mu[0] + mu[1] * mu[1]).sqrt();
    psi_literal(fs, mu, b)
}

#[inline]
fn psi_literal<S: Scalar>(fs: &FinalState, mu: [S; 2], b: S) -> S {
    let (r0, i0) = fs.ft_phi_generic(Component::Phi0, mu);
    let (r1, i1) = fs.ft_phi_generic(Component::Phi1, mu);
    let ib = b.recip();
    let re = r0 - ib * i1;
    let im = i0 + ib * r1;
    -(b * (re * re + im * im).sqrt()) * (4.0 / (3.0 * PI))
}

/// Polar angle of `(P₁, Q₁)` on the branch `(0, 2π]`.
pub fn beta(p: f64, q: f64) -> Result<f64> {
    if p == 0.0 && q == 0.0 {
        return Err(Error::DegenerateAmplitude);
    }
    let a = q.atan2(p);
    Ok(if a <= 0.0 { a + 2.0 * PI } else { a })
}

/// Corrector coefficients `(P_n, Q_n)` at `μ`.
pub fn pn_qn(n: u32, fs: &FinalState, mu: [f64; 2], lambda: f64) -> (f64, f64) {
    let (p, q) = p1_q1(fs, mu);
    let amp2 = p * p + q * q;
    if amp2 == 0.0 {
        return (0.0, 0.0);
    }
    let g = corrector_coeff(n) * lambda * amp2;
    let b = beta(p, q).expect("nonzero amplitude");
    let (s, c) = (n as f64 * b).sin_cos();
    (g * c, g * s)
}

/// Amplitude, phase and cone data of the profile at one space-time point.
#[derive(Debug, Clone, Copy)]
pub struct Local<S> {
    pub p: S,
    pub q: S,
    pub psi: S,
    pub alpha: S,
    pub bracket: S,
    pub t: S,
}

impl<S: Scalar> Local<S> {
    /// `P₁cos α + Q₁sin α`.
    #[inline]
    pub fn carrier(&self) -> S {
        let (s, c) = self.alpha.sin_cos();
        self.p * c + self.q * s
    }

    #[inline]
    pub fn amp2(&self) -> S {
        self.p * self.p + self.q * self.q
    }
}

/// Values of every profile quantity at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointValues {
    pub u_ap: f64,
    pub v_ap: f64,
    pub n_r: f64,
    pub n_nr: f64,
}

/// Grid samples of [`PointValues`].
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u_ap: RealField,
    pub v_ap: RealField,
    pub n_r: RealField,
    pub n_nr: RealField,
}

impl Snapshot {
    pub fn a(&self) -> RealField {
        self.u_ap.add(&self.v_ap).expect("same grid")
    }
}

/// `f`, `∂_t f`, `∂_t² f` on a grid.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub value: RealField,
    pub dt: RealField,
    pub dtt: RealField,
}

/// Evaluates the profile of one final state.
#[derive(Debug, Clone)]
pub struct Profile {
    fs: FinalState,
    pp: ProfileParams,
    /// `c_n` for odd `n ≥ 3`, indexed by `(n-3)/2`.
    cn: Vec<f64>,
    /// `c_n/(1-n²)`, same indexing.
    kn: Vec<f64>,
}

impl Profile {
    pub fn new(fs: &FinalState, pp: &ProfileParams) -> Result<Self> {
        fs.validate()?;
        pp.validate()?;
        let odd: Vec<u32> = (3..=pp.n_max).step_by(2).collect();
        Ok(Profile {
            fs: fs.clone(),
            pp: *pp,
            cn: odd.iter().map(|&n| fourier_coeff(n)).collect(),
            kn: odd.iter().map(|&n| corrector_coeff(n)).collect(),
        })
    }

    pub fn final_state(&self) -> &FinalState {
        &self.fs
    }

    pub fn params(&self) -> &ProfileParams {
        &self.pp
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t > 1.0) || !t.is_finite() {
            return Err(Error::TimeOutOfRange { t, reason: "profile requires t > 1".into() });
        }
        Ok(())
    }

    /// The phase correction actually used, including the coupling factor.
    pub fn effective_psi(&self, mu: [f64; 2]) -> f64 {
        self.pp.psi_factor() * psi(&self.fs, mu)
    }

    /// Local data, or `None` outside the cone cutoff.
    #[inline]
    pub fn local<S: Scalar>(&self, t: S, x: [f64; 2]) -> Option<Local<S>> {
        let (mu, bracket, s) = hyperbolic_generic(t, x, self.pp.delta_cone)?;
        let (p, q) = amplitudes(&self.fs, mu, bracket);
        let factor = self.pp.psi_factor();
        let psi = if factor == 0.0 {
            S::cst(0.0)
        } else {
            psi_literal(&self.fs, mu, bracket) * factor
        };
        let alpha = s + psi * t.ln();
        Some(Local { p, q, psi, alpha, bracket, t })
    }

    /// `cos(α - β)` together with `P₁² + Q₁²`; `None` for vanishing amplitude.
    #[inline]
    fn phase_cos<S: Scalar>(l: &Local<S>) -> Option<(S, S)> {
        let amp2 = l.amp2();
        if amp2.value() == 0.0 {
            return None;
        }
        Some((l.carrier() / amp2.sqrt(), amp2))
    }

    /// `Σ coeff[j]·T_{2j+3}(c)` by the Chebyshev recurrence.
    #[inline]
    fn odd_harmonics<S: Scalar>(coeff: &[f64], c: S) -> S {
        let mut acc = S::cst(0.0);
        let (mut tm1, mut t0) = (S::cst(1.0), c);
        let two_c = c * 2.0;
        let mut n = 1;
        let mut j = 0;
        while j < coeff.len() {
            let t1 = two_c * t0 - tm1;
            tm1 = t0;
            t0 = t1;
            n += 1;
            if n % 2 == 1 {
                acc = acc + t0 * coeff[j];
                j += 1;
            }
        }
        acc
    }

    /// `T_n(c)` for a single `n`.
    #[inline]
    fn chebyshev<S: Scalar>(n: u32, c: S) -> S {
        let (mut tm1, mut t0) = (S::cst(1.0), c);
        if n == 0 {
            return tm1;
        }
        let two_c = c * 2.0;
        for _ in 1..n {
            let t1 = two_c * t0 - tm1;
            tm1 = t0;
            t0 = t1;
        }
        t0
    }

    #[inline]
    pub fn u_ap_generic<S: Scalar>(&self, t: S, x: [f64; 2]) -> S {
        match self.local(t, x) {
            Some(l) => l.carrier() / t,
            None => S::cst(0.0),
        }
    }

    #[inline]
    pub fn v_ap_generic<S: Scalar>(&self, t: S, x: [f64; 2]) -> S {
        let Some(l) = self.local(t, x) else {
            return S::cst(0.0);
        };
        let Some((c, amp2)) = Self::phase_cos(&l) else {
            return S::cst(0.0);
        };
        amp2 * Self::odd_harmonics(&self.kn, c) * self.pp.lambda / (t * t)
    }

    /// `(u_ap, v_ap)` sharing one local evaluation.
    #[inline]
    pub fn uv_generic<S: Scalar>(&self, t: S, x: [f64; 2]) -> (S, S) {
        let Some(l) = self.local(t, x) else {
            return (S::cst(0.0), S::cst(0.0));
        };
        let carrier = l.carrier();
        let u = carrier / t;
        let amp2 = l.amp2();
        if amp2.value() == 0.0 {
            return (u, S::cst(0.0));
        }
        let c = carrier / amp2.sqrt();
        let v = amp2 * Self::odd_harmonics(&self.kn, c) * self.pp.lambda / (t * t);
        (u, v)
    }

    /// The `n`-th corrector term `t⁻²(P_n cos nα + Q_n sin nα)`.
    #[inline]
    pub fn corrector_term<S: Scalar>(&self, n: u32, t: S, x: [f64; 2]) -> S {
        let Some(l) = self.local(t, x) else {
            return S::cst(0.0);
        };
        let Some((c, amp2)) = Self::phase_cos(&l) else {
            return S::cst(0.0);
        };
        amp2 * Self::chebyshev(n, c) * (corrector_coeff(n) * self.pp.lambda) / (t * t)
    }

    /// The `n`-th harmonic of the nonresonant source, `λt⁻²(P₁²+Q₁²)c_n cos(n(α-β))`.
    pub fn source_term(&self, n: u32, t: f64, x: [f64; 2]) -> f64 {
        let Some(l) = self.local(t, x) else {
            return 0.0;
        };
        let Some((c, amp2)) = Self::phase_cos(&l) else {
            return 0.0;
        };
        amp2 * Self::chebyshev(n, c) * fourier_coeff(n) * self.pp.lambda / (t * t)
    }

    /// `(□+1)` of the `n`-th corrector minus the `n`-th source at one point.
    ///
    /// Exact in `t`; the Laplacian uses fourth-order central differences with
    /// step `h_x`, which stays accurate where a grid cannot resolve `cos(nα)`.
    pub fn harmonic_remainder(&self, n: u32, t: f64, x: [f64; 2], h_x: f64) -> f64 {
        let j = self.corrector_term(n, Jet::variable(t), x);
        let axis = |e: [f64; 2]| {
            let f = |k: f64| self.corrector_term(n, t, [x[0] + k * h_x * e[0], x[1] + k * h_x * e[1]]);
            (-f(2.0) + 16.0 * f(1.0) - 30.0 * j.v + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h_x * h_x)
        };
        let lap = axis([1.0, 0.0]) + axis([0.0, 1.0]);
        j.d2 - lap + j.v - self.source_term(n, t, x)
    }

    pub fn point(&self, t: f64, x: [f64; 2]) -> PointValues {
        let Some(l) = self.local(t, x) else {
            return PointValues::default();
        };
        let carrier = l.carrier();
        let u_ap = carrier / t;
        let amp2 = l.amp2();
        if amp2 == 0.0 {
            return PointValues { u_ap, ..Default::default() };
        }
        let c = carrier / amp2.sqrt();
        let scale = self.pp.lambda * amp2 / (t * t);
        PointValues {
            u_ap,
            v_ap: scale * Self::odd_harmonics(&self.kn, c),
            n_r: scale * C1 * c,
            n_nr: scale * Self::odd_harmonics(&self.cn, c),
        }
    }

    pub fn u_ap_eval(&self, t: f64, x: [f64; 2]) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.u_ap_generic(t, x))
    }

    pub fn v_ap_eval(&self, t: f64, x: [f64; 2]) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.v_ap_generic(t, x))
    }

    pub fn a_eval(&self, t: f64, x: [f64; 2]) -> Result<f64> {
        Self::check_time(t)?;
        let (u, v) = self.uv_generic(t, x);
        Ok(u + v)
    }

    /// `N_r(u_ap)` at a point.
    pub fn resonant_part(&self, t: f64, x: [f64; 2]) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.point(t, x).n_r)
    }

    /// `N_nr(u_ap)` truncated at `n_max`.
    pub fn nonresonant_part(&self, t: f64, x: [f64; 2]) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.point(t, x).n_nr)
    }

    pub fn snapshot(&self, t: f64, grid: Grid2D) -> Result<Snapshot> {
        Self::check_time(t)?;
        let [u_ap, v_ap, n_r, n_nr] = RealField::from_fn_multi(grid, |x, y| {
            let p = self.point(t, [x, y]);
            [p.u_ap, p.v_ap, p.n_r, p.n_nr]
        });
        Ok(Snapshot { t, u_ap, v_ap, n_r, n_nr })
    }

    pub fn sample_u_ap(&self, t: f64, grid: Grid2D) -> Result<RealField> {
        Self::check_time(t)?;
        Ok(RealField::from_fn(grid, |x, y| self.u_ap_generic(t, [x, y])))
    }

    pub fn sample_a(&self, t: f64, grid: Grid2D) -> Result<RealField> {
        Self::check_time(t)?;
        Ok(RealField::from_fn(grid, |x, y| {
            let (u, v) = self.uv_generic(t, [x, y]);
            u + v
        }))
    }

    /// `(u_ap, v_ap)` on a grid.
    pub fn sample_uv(&self, t: f64, grid: Grid2D) -> Result<(RealField, RealField)> {
        Self::check_time(t)?;
        let [u, v] = RealField::from_fn_multi(grid, |x, y| {
            let (u, v) = self.uv_generic(t, [x, y]);
            [u, v]
        });
        Ok((u, v))
    }

    /// Exact time jets of `u_ap` and `v_ap`.
    pub fn sample_uv_jets(&self, t: f64, grid: Grid2D) -> Result<(FieldJet, FieldJet)> {
        Self::check_time(t)?;
        let [u0, u1, u2, v0, v1, v2] = RealField::from_fn_multi(grid, |x, y| {
            let (u, v) = self.uv_generic(Jet::variable(t), [x, y]);
            [u.v, u.d1, u.d2, v.v, v.d1, v.d2]
        });
        Ok((
            FieldJet { value: u0, dt: u1, dtt: u2 },
            FieldJet { value: v0, dt: v1, dtt: v2 },
        ))
    }

    /// Exact time jet of a single corrector term and the matching source term.
    pub fn sample_harmonic(&self, n: u32, t: f64, grid: Grid2D) -> Result<(FieldJet, RealField)> {
        Self::check_time(t)?;
        let [a, b, c, s] = RealField::from_fn_multi(grid, |x, y| {
            let j = self.corrector_term(n, Jet::variable(t), [x, y]);
            [j.v, j.d1, j.d2, self.source_term(n, t, [x, y])]
        });
        Ok((FieldJet { value: a, dt: b, dtt: c }, s))
    }

    /// `max √(P₁²+Q₁²)` over a polar sample of `μ`, with the arg-max radius.
    pub fn peak_amplitude(&self) -> f64 {
        peak_amplitude(&self.fs, 10.0)
    }
}

fn peak_amplitude(fs: &FinalState, mu_max: f64) -> f64 {
    let mut peak = 0.0f64;
    for i in 0..=200 {
        let r = mu_max * i as f64 / 200.0;
        for j in 0..64 {
            let th = 2.0 * PI * j as f64 / 64.0;
            let (p, q) = p1_q1(fs, [r * th.cos(), r * th.sin()]);
            peak = peak.max(p.hypot(q));
        }
    }
    peak
}

/// Smallest cone cutoff such that a radial bound on `√(P₁²+Q₁²)` is below
/// `1e-12` of the sampled peak at `|x| = t(1-δ)`.
pub fn auto_delta_cone(fs: &FinalState) -> f64 {
    const FALLBACK: f64 = 1e-3;
    let peak = peak_amplitude(fs, 10.0);
    if peak == 0.0 {
        return FALLBACK;
    }
    let bound = |m: f64| {
        let b2 = 1.0 + m * m;
        b2 * fs.ft_envelope(Component::Phi0, m) + b2.sqrt() * fs.ft_envelope(Component::Phi1, m)
    };
    let mut m = 0.0;
    while bound(m) > 1e-12 * peak {
        m += 0.01;
        if m > 1e4 {
            return FALLBACK;
        }
    }
    (1.0 - m / (1.0 + m * m).sqrt()).clamp(1e-6, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::final_data::{GaussianAtom, KAPPA_CALIBRATED};
    use proptest::prelude::*;

    fn state() -> FinalState {
        FinalState::new(
            vec![GaussianAtom::new(0.6, [0.5, -0.3], 1.2).unwrap()],
            vec![GaussianAtom::new(0.4, [-0.2, 0.4], 1.0).unwrap()],
            KAPPA_CALIBRATED,
        )
        .unwrap()
    }

    #[test]
    fn hyperbolic_examples() {
        let h = hyperbolic(5.0, [3.0, 0.0], 1e-3).unwrap();
        assert!(h.inside);
        assert!((h.mu[0] - 0.75).abs() < 1e-15 && h.mu[1] == 0.0);
        assert!((h.bracket - 1.25).abs() < 1e-15);
        let o = hyperbolic(1.0, [0.0, 0.0], 1e-3).unwrap();
        assert_eq!((o.mu, o.bracket), ([0.0, 0.0], 1.0));
        assert!(!hyperbolic(1.0, [2.0, 0.0], 1e-3).unwrap().inside);
        assert!(hyperbolic(0.0, [0.0, 0.0], 1e-3).is_err());
    }

    proptest! {
        #[test]
        fn bracket_identity(t in 2.0f64..500.0, fx in -0.99f64..0.99, fy in -0.99f64..0.99) {
            let x = [fx * t * 0.7, fy * t * 0.7];
            let h = hyperbolic(t, x, 1e-6).unwrap();
            prop_assume!(h.inside);
            let m2 = h.mu[0] * h.mu[0] + h.mu[1] * h.mu[1];
            prop_assert!((h.bracket * h.bracket - m2 - 1.0).abs() < 1e-14 * h.bracket * h.bracket);
            let direct = t / (t * t - x[0] * x[0] - x[1] * x[1]).sqrt();
            prop_assert!((h.bracket - direct).abs() < 1e-13 * direct);
        }

        #[test]
        fn psi_squared_matches_complex_modulus(mx in -3.0f64..3.0, my in -3.0f64..3.0) {
            let fs = state();
            let mu = [mx, my];
            let b = (1.0 + mx * mx + my * my).sqrt();
            let f0 = fs.ft_phi(Component::Phi0, mu);
            let f1 = fs.ft_phi(Component::Phi1, mu);
            let expanded = 16.0 / (9.0 * PI * PI)
                * b * b
                * (f0.norm_sqr() + f1.norm_sqr() / (b * b) + 2.0 / b * (f0 * f1.conj()).im);
            let p = psi(&fs, mu);
            prop_assert!((p * p - expanded).abs() <= 1e-12 * expanded.max(1e-300));
            prop_assert!(p <= 0.0);
        }

        #[test]
        fn u_ap_within_envelope(t in 2.0f64..300.0, fx in -1.0f64..1.0, fy in -1.0f64..1.0) {
            let fs = state();
            let pr = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
            let x = [fx * t, fy * t];
            let u = pr.u_ap_eval(t, x).unwrap();
            let h = hyperbolic(t, x, pr.params().delta_cone).unwrap();
            let (p, q) = p1_q1(&fs, h.mu);
            let bound = if h.inside { p.hypot(q) / t } else { 0.0 };
            prop_assert!(u.abs() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn corrector_matches_explicit_coefficients(t in 2.0f64..300.0, fx in -0.8f64..0.8, fy in -0.8f64..0.8) {
            let fs = state();
            let pp = ProfileParams::for_state(&fs, -1.0).with_n_max(9);
            let pr = Profile::new(&fs, &pp).unwrap();
            let x = [fx * t, fy * t];
            let Some(l) = pr.local(t, x) else { return Ok(()); };
            let h = hyperbolic(t, x, pp.delta_cone).unwrap();
            let mut explicit = 0.0;
            for n in 2..=9 {
                let (pn, qn) = pn_qn(n, &fs, h.mu, pp.lambda);
                let (s, c) = (n as f64 * l.alpha).sin_cos();
                explicit += pn * c + qn * s;
            }
            explicit /= t * t;
            let fast = pr.v_ap_eval(t, x).unwrap();
            prop_assert!((fast - explicit).abs() <= 1e-12 * (l.amp2() / (t * t)));
        }

        #[test]
        fn resonant_forms_agree(t in 2.0f64..300.0, fx in -0.8f64..0.8, fy in -0.8f64..0.8) {
            let fs = state();
            let pr = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
            let x = [fx * t, fy * t];
            let Some(l) = pr.local(t, x) else { return Ok(()); };
            let b = beta(l.p, l.q).unwrap();
            let amp2 = l.amp2();
            let rewritten = C1 * amp2 * (l.alpha - b).cos() / (t * t);
            let direct = C1 * amp2.sqrt() * l.carrier() / (t * t);
            let n_r = pr.resonant_part(t, x).unwrap();
            prop_assert!((rewritten - direct).abs() <= 1e-12 * amp2 / (t * t));
            prop_assert!((n_r - direct).abs() <= 1e-12 * amp2 / (t * t));
        }
    }

    #[test]
    fn centred_symmetric_data() {
        let even = FinalState::new(
            vec![GaussianAtom::new(1.0, [0.0, 0.0], 1.0).unwrap()],
            vec![],
            KAPPA_CALIBRATED,
        )
        .unwrap();
        let mu = [0.4, -0.9];
        let b = (1.0f64 + 0.16 + 0.81).sqrt();
        let (p, q) = p1_q1(&even, mu);
        assert!(p.abs() < 1e-300);
        assert!((q - b * b * even.ft_phi(Component::Phi0, mu).re).abs() < 1e-15);

        let odd = FinalState { phi0: vec![], phi1: even.phi0.clone(), kappa: even.kappa };
        let (p, q) = p1_q1(&odd, mu);
        assert!((p + b * odd.ft_phi(Component::Phi1, mu).re).abs() < 1e-15);
        assert!(q.abs() < 1e-300);
        assert_eq!(p1_q1(&FinalState::default(), mu), (0.0, 0.0));
        assert_eq!(psi(&FinalState::default(), mu), 0.0);
    }

    #[test]
    fn psi_of_unit_transform() {
        // κ·a·2πσ² = 1 makes φ̂₀(0) = 1.
        let a = 1.0 / (KAPPA_CALIBRATED * 2.0 * PI);
        let fs = FinalState::new(
            vec![GaussianAtom::new(a, [0.0, 0.0], 1.0).unwrap()],
            vec![],
            KAPPA_CALIBRATED,
        )
        .unwrap();
        assert!((fs.ft_phi(Component::Phi0, [0.0, 0.0]).re - 1.0).abs() < 1e-15);
        assert!((psi(&fs, [0.0, 0.0]) + 0.424413).abs() < 1e-6);
    }

    #[test]
    fn beta_branch() {
        assert!((beta(1.0, 0.0).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((beta(0.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((beta(-1.0, -1.0).unwrap() - 1.25 * PI).abs() < 1e-15);
        assert!((beta(-1.0, 0.0).unwrap() - PI).abs() < 1e-15);
        assert!(matches!(beta(0.0, 0.0), Err(Error::DegenerateAmplitude)));
    }

    #[test]
    fn pn_qn_examples() {
        // (P₁, Q₁) = (1, 0) needs φ̂₀ = -i/⟨μ⟩²; realise it at μ = 0 through a
        // shifted atom is awkward, so check the formula on a direct amplitude.
        let g3 = corrector_coeff(3) * 1.0 * 1.0;
        assert!((g3 + 1.0 / (15.0 * PI)).abs() < 1e-16);
        assert!((g3 + 0.0212207).abs() < 1e-7);
        let fs = state();
        for n in [2u32, 4, 10] {
            assert_eq!(pn_qn(n, &fs, [0.3, 0.2], 1.0), (0.0, 0.0));
        }
        for n in [3u32, 5, 7] {
            let (pn, qn) = pn_qn(n, &fs, [0.3, 0.2], 1.0);
            let (p, q) = p1_q1(&fs, [0.3, 0.2]);
            let g = corrector_coeff(n) * (p * p + q * q);
            assert!((pn.hypot(qn) - g.abs()).abs() < 1e-15);
        }
        assert_eq!(pn_qn(3, &FinalState::default(), [0.3, 0.2], 1.0), (0.0, 0.0));
    }

    #[test]
    fn corrector_decay_exponent() {
        let odd: Vec<u32> = (5..=101).step_by(2).collect();
        let xs: Vec<f64> = odd.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = odd.iter().map(|&n| corrector_coeff(n).abs().ln()).collect();
        let slope = crate::residual_lab::linear_slope(&xs, &ys);
        assert!(-slope >= 4.8, "{slope}");
    }

    #[test]
    fn zero_data_gives_zero_profile() {
        let fs = FinalState::default();
        let pp = ProfileParams { delta_cone: 1e-3, ..ProfileParams::for_state(&fs, 1.0) };
        let pr = Profile::new(&fs, &pp).unwrap();
        for x in [[0.0, 0.0], [3.0, -4.0], [50.0, 0.0]] {
            assert_eq!(pr.point(10.0, x), PointValues::default());
        }
    }

    #[test]
    fn outside_cone_is_zero_and_time_is_checked() {
        let fs = state();
        let pr = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
        assert_eq!(pr.u_ap_eval(10.0, [10.0, 0.0]).unwrap(), 0.0);
        assert_eq!(pr.v_ap_eval(10.0, [0.0, 11.0]).unwrap(), 0.0);
        assert!(pr.u_ap_eval(1.0, [0.0, 0.0]).is_err());
        assert!(pr.a_eval(0.5, [0.0, 0.0]).is_err());
    }

    #[test]
    fn a_is_sum_of_parts() {
        let fs = state();
        let pr = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
        let x = [3.0, 1.0];
        let a = pr.a_eval(20.0, x).unwrap();
        let u = pr.u_ap_eval(20.0, x).unwrap();
        let v = pr.v_ap_eval(20.0, x).unwrap();
        assert!((a - u - v).abs() <= 1e-15 * u.abs().max(v.abs()));
    }

    #[test]
    fn truncation_tail_bound() {
        let fs = state();
        let pp = ProfileParams::for_state(&fs, 1.0);
        let p41 = Profile::new(&fs, &pp).unwrap();
        let p81 = Profile::new(&fs, &pp.with_n_max(81)).unwrap();
        let t = 30.0;
        let peak = p41.peak_amplitude();
        let tol = 8.0 / PI * 41f64.powi(-4) * peak * peak / (t * t);
        for i in 0..40 {
            let x = [i as f64 * 0.6 - 12.0, 0.3 * i as f64 - 6.0];
            let d = p41.v_ap_eval(t, x).unwrap() - p81.v_ap_eval(t, x).unwrap();
            assert!(d.abs() < tol);
        }
    }

    #[test]
    fn cutoff_jump_is_negligible() {
        let fs = state();
        let pp = ProfileParams::for_state(&fs, 1.0);
        let pr = Profile::new(&fs, &pp).unwrap();
        let t = 40.0;
        let rc = t * (1.0 - pp.delta_cone);
        let peak = pr.peak_amplitude() / t;
        for k in 0..32 {
            let th = 2.0 * PI * k as f64 / 32.0;
            let r = rc * (1.0 - 1e-12);
            let u = pr.u_ap_eval(t, [r * th.cos(), r * th.sin()]).unwrap();
            assert!(u.abs() < 1e-8 * peak);
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let fs = state();
        let pr = Profile::new(&fs, &ProfileParams::for_state(&fs, 1.0)).unwrap();
        let x = [4.0, -2.5];
        let t = 17.0;
        let h = 1e-3;
        let (u, v) = pr.uv_generic(Jet::variable(t), x);
        let f = |s: f64| pr.uv_generic(s, x);
        let (um, vm) = f(t - h);
        let (u0, v0) = f(t);
        let (up, vp) = f(t + h);
        assert!((u.d1 - (up - um) / (2.0 * h)).abs() < 1e-6);
        assert!((u.d2 - (up - 2.0 * u0 + um) / (h * h)).abs() < 1e-5);
        assert!((v.d1 - (vp - vm) / (2.0 * h)).abs() < 1e-7);
        assert!((v.d2 - (vp - 2.0 * v0 + vm) / (h * h)).abs() < 1e-6);
    }
}
