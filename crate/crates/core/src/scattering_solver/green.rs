//! The retarded operator `G[g](t) = ∫_t^∞ sin((t-τ)⟨∇⟩)⟨∇⟩⁻¹ g(τ) dτ`,
//! truncated at the last sample time.
//!
//! Sign convention, pinned by the defect test below: `(□+1)G[g] = -g`.

use rayon::prelude::*;

use super::TimeSampledField;
use crate::error::{Error, Result};
use crate::spectral_core::{l2_norm, l4_norm, Grid2D, RealField, SpectralMultiplier, Spectrum};

/// Relative tolerance when checking that sample times are equally spaced.
const SPACING_TOL: f64 = 1e-9;

/// Exact linear flow over a fixed time step, tabulated per mode.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid2D,
    dt: f64,
    /// `cos(dt·ω)`.
    c: Vec<f64>,
    /// `sin(dt·ω)/ω`.
    s: Vec<f64>,
    /// `ω·sin(dt·ω)`.
    ws: Vec<f64>,
}

impl Propagator {
    pub fn new(grid: Grid2D, dt: f64) -> Self {
        let n = grid.n();
        let k = grid.wavenumbers();
        let mut c = vec![0.0; grid.len()];
        let mut s = vec![0.0; grid.len()];
        let mut ws = vec![0.0; grid.len()];
        c.par_chunks_mut(n)
            .zip(s.par_chunks_mut(n))
            .zip(ws.par_chunks_mut(n))
            .enumerate()
            .for_each(|(i, ((cr, sr), wr))| {
                for j in 0..n {
                    let w = (1.0 + k[i] * k[i] + k[j] * k[j]).sqrt();
                    let (sn, cs) = (dt * w).sin_cos();
                    cr[j] = cs;
                    sr[j] = sn / w;
                    wr[j] = w * sn;
                }
            });
        Propagator { grid, dt, c, s, ws }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Advances `(ŵ, ŵ_t)` in place by `dt`.
    pub fn flow(&self, w: &mut Spectrum, wt: &mut Spectrum) {
        w.data_mut()
            .par_iter_mut()
            .zip(wt.data_mut().par_iter_mut())
            .zip(self.c.par_iter().zip(self.s.par_iter().zip(self.ws.par_iter())))
            .for_each(|((a, b), (&c, (&s, &ws)))| {
                let (a0, b0) = (*a, *b);
                *a = a0 * c + b0 * s;
                *b = -a0 * ws + b0 * c;
            });
    }

    /// `acc += coef · sin(dt·ω)/ω · ĝ`.
    fn add_kernel(&self, acc: &mut Spectrum, coef: f64, g: &Spectrum) {
        add_scaled(acc, &self.s, coef, g);
    }

    /// `acc += coef · cos(dt·ω) · ĝ`.
    fn add_cos(&self, acc: &mut Spectrum, coef: f64, g: &Spectrum) {
        add_scaled(acc, &self.c, coef, g);
    }
}

fn add_scaled(acc: &mut Spectrum, m: &[f64], coef: f64, g: &Spectrum) {
    acc.data_mut()
        .par_iter_mut()
        .zip(g.data().par_iter().zip(m.par_iter()))
        .for_each(|(a, (&x, &mk))| *a += x * (coef * mk));
}

pub(crate) fn add_spectra(a: &Spectrum, b: &Spectrum) -> Spectrum {
    let data = a.data().par_iter().zip(b.data().par_iter()).map(|(x, y)| x + y).collect();
    Spectrum::from_vec(*a.grid(), data).expect("same grid")
}

pub(crate) fn sub_spectra(a: &Spectrum, b: &Spectrum) -> Spectrum {
    let data = a.data().par_iter().zip(b.data().par_iter()).map(|(x, y)| x - y).collect();
    Spectrum::from_vec(*a.grid(), data).expect("same grid")
}

/// Backward recursion for `W = G[g]` on equally spaced nodes
/// `τ_M > τ_{M-1} > … `, visited in decreasing order.
///
/// The state is `(Ŵ, Ŵ_t)` at the most recent node of the same parity as
/// `M`. Nodes of that parity use Simpson on `[τ_j, τ_{j+2}]`; the others use
/// the three-point rule `h(5f₀+8f₁-f₂)/12` on `[τ_j, τ_{j+1}]`, except
/// `τ_{M-1}`, which uses the trapezoid. Only `ĝ_{j+1}` and `ĝ_{j+2}` enter the
/// value at `τ_j`, because the kernel vanishes at `τ = t`.
pub struct GreenSweep {
    h: f64,
    grid: Grid2D,
    /// Nodes visited so far.
    visited: usize,
    w: Spectrum,
    wt: Spectrum,
    /// `Ŵ_t` at the pending node, still missing the `ĝ_j` contribution.
    pending_wt: Option<Spectrum>,
    pending_w: Option<Spectrum>,
    g1: Option<Spectrum>,
    g2: Option<Spectrum>,
}

/// Propagators shared by every sweep on one grid and node spacing.
pub struct SweepKernels {
    pub(crate) one: Propagator,
    pub(crate) two: Propagator,
}

impl SweepKernels {
    pub fn new(grid: Grid2D, h: f64) -> Self {
        SweepKernels { one: Propagator::new(grid, -h), two: Propagator::new(grid, -2.0 * h) }
    }

    fn h(&self) -> f64 {
        -self.one.dt
    }
}

impl GreenSweep {
    pub fn new(kernels: &SweepKernels) -> Self {
        let grid = *kernels.one.grid();
        GreenSweep {
            h: kernels.h(),
            grid,
            visited: 0,
            w: Spectrum::zeros(grid),
            wt: Spectrum::zeros(grid),
            pending_wt: None,
            pending_w: None,
            g1: None,
            g2: None,
        }
    }

    /// `Ŵ` at the next node; must be followed by [`GreenSweep::accept`].
    pub fn advance(&mut self, k: &SweepKernels) -> Spectrum {
        let h = self.h;
        let grid = self.grid;
        match self.visited {
            0 => {
                self.pending_w = Some(Spectrum::zeros(grid));
                self.pending_wt = Some(Spectrum::zeros(grid));
                Spectrum::zeros(grid)
            }
            1 => {
                let (mut w, mut wt) = (self.w.clone(), self.wt.clone());
                k.one.flow(&mut w, &mut wt);
                k.one.add_kernel(&mut w, 0.5 * h, self.g1.as_ref().expect("g at τ_M"));
                w
            }
            v if v % 2 == 0 => {
                let (mut w, mut wt) = (self.w.clone(), self.wt.clone());
                k.two.flow(&mut w, &mut wt);
                let g1 = self.g1.as_ref().expect("g at τ_{j+1}");
                let g2 = self.g2.as_ref().expect("g at τ_{j+2}");
                k.one.add_kernel(&mut w, 4.0 * h / 3.0, g1);
                k.two.add_kernel(&mut w, h / 3.0, g2);
                k.one.add_cos(&mut wt, 4.0 * h / 3.0, g1);
                k.two.add_cos(&mut wt, h / 3.0, g2);
                self.pending_w = Some(w.clone());
                self.pending_wt = Some(wt);
                w
            }
            _ => {
                let (mut w, mut wt) = (self.w.clone(), self.wt.clone());
                k.one.flow(&mut w, &mut wt);
                k.one.add_kernel(&mut w, 8.0 * h / 12.0, self.g1.as_ref().expect("g at τ_{j+1}"));
                k.two.add_kernel(&mut w, -h / 12.0, self.g2.as_ref().expect("g at τ_{j+2}"));
                w
            }
        }
    }

    /// Records `ĝ` at the node returned by the last [`GreenSweep::advance`].
    pub fn accept(&mut self, g: Spectrum) {
        if self.visited % 2 == 0 {
            let w = self.pending_w.take().expect("advance before accept");
            let mut wt = self.pending_wt.take().expect("advance before accept");
            if self.visited > 0 {
                let coef = self.h / 3.0;
                wt.data_mut()
                    .par_iter_mut()
                    .zip(g.data().par_iter())
                    .for_each(|(a, &x)| *a += x * coef);
            }
            self.w = w;
            self.wt = wt;
        }
        self.g2 = self.g1.take();
        self.g1 = Some(g);
        self.visited += 1;
    }
}

/// Checks equal spacing and returns the common step.
pub(crate) fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter("need at least two sample times".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (j, pair) in times.windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidParameter(format!("sample times not increasing at index {j}")));
        }
        if ((pair[1] - pair[0]) - h).abs() > SPACING_TOL * h.max(1.0) {
            return Err(Error::InvalidParameter("sample times must be equally spaced".into()));
        }
    }
    Ok(h)
}

/// Index of the sample time equal to `t`.
pub(crate) fn node_index(times: &[f64], t: f64) -> Result<usize> {
    let (lo, hi) = (times[0], times[times.len() - 1]);
    if !(t >= lo - SPACING_TOL && t <= hi + SPACING_TOL) {
        return Err(Error::TimeOutOfRange { t, reason: format!("outside sampled range [{lo}, {hi}]") });
    }
    let h = (hi - lo) / (times.len() - 1) as f64;
    let j = ((t - lo) / h).round() as usize;
    if (times[j] - t).abs() > SPACING_TOL * h.max(1.0) * 10.0 {
        return Err(Error::TimeOutOfRange { t, reason: "not a sample time".into() });
    }
    Ok(j)
}

/// `G[g](t)` together with the truncation-tail estimate.
#[derive(Debug, Clone)]
pub struct GApplied {
    pub field: RealField,
    /// `∫_{T_end}^∞ Cτ^{-1-d}dτ` with `C` matched to `‖g(T_end)‖_{L²}`.
    pub tail: f64,
}

/// Bound on the part of the integral beyond the last sample, assuming
/// `‖g(τ)‖_{L²} ≤ Cτ^{-1-d}`; the kernel has operator norm at most one.
pub fn tail_estimate(g_end_norm: f64, t_end: f64, d: f64) -> f64 {
    g_end_norm * t_end / d
}

/// Quadrature weights in τ for `∫_{τ_j}^{τ_M} f`, matching [`GreenSweep`].
pub(crate) fn quadrature_weights(len: usize, j: usize, h: f64) -> Vec<f64> {
    let m = len - 1;
    let mut w = vec![0.0; len];
    if j >= m {
        return w;
    }
    let mut start = j;
    if (m - j) % 2 == 1 {
        if m - j == 1 {
            w[j] += 0.5 * h;
            w[j + 1] += 0.5 * h;
            return w;
        }
        w[j] += 5.0 * h / 12.0;
        w[j + 1] += 8.0 * h / 12.0;
        w[j + 2] -= h / 12.0;
        start = j + 1;
    }
    let mut i = start;
    while i < m {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    w
}

/// `G[g](t)` at a sample time `t`, summing each kernel term directly.
///
/// The samples must be equally spaced; `d` sets the assumed decay of the
/// truncated tail.
pub fn g_apply(g: &TimeSampledField, t: f64, d: f64) -> Result<GApplied> {
    g.ensure_single_grid()?;
    let times = g.times();
    let h = uniform_step(times)?;
    let j = node_index(times, t)?;
    let weights = quadrature_weights(times.len(), j, h);
    let grid = *g.fields()[0].grid();
    let mut acc = Spectrum::zeros(grid);
    for (i, &wi) in weights.iter().enumerate() {
        if wi == 0.0 || i == j {
            continue;
        }
        let mut s = g.fields()[i].spectrum();
        s.apply(&SpectralMultiplier::SinOverOmega(t - times[i]));
        acc.data_mut()
            .par_iter_mut()
            .zip(s.data().par_iter())
            .for_each(|(a, &x)| *a += x * wi);
    }
    let last = g.fields().last().expect("nonempty");
    Ok(GApplied {
        field: acc.to_field(),
        tail: tail_estimate(l2_norm(last), times[times.len() - 1], d),
    })
}

/// `G[g]` at every sample time, by the backward recursion.
pub fn g_apply_all(g: &TimeSampledField) -> Result<TimeSampledField> {
    g.ensure_single_grid()?;
    let times = g.times();
    let h = uniform_step(times)?;
    let grid = *g.fields()[0].grid();
    let kernels = SweepKernels::new(grid, h);
    let mut sweep = GreenSweep::new(&kernels);
    let mut out = vec![RealField::zeros(grid); times.len()];
    for j in (0..times.len()).rev() {
        out[j] = sweep.advance(&kernels).to_field();
        sweep.accept(g.fields()[j].spectrum());
    }
    TimeSampledField::new(times.to_vec(), out)
}

/// Discrete sides of the inhomogeneous Strichartz estimate for the
/// admissible pair `(p, q) = (4, 4)`:
/// `‖G[g]‖_{L⁴_t L⁴_x}` and `‖(1-Δ)^{-1/4} g‖_{L¹_t L²_x}`, both with
/// trapezoid weights in time.
pub fn strichartz_diagnostic(g: &TimeSampledField, q: u32) -> Result<(f64, f64)> {
    if q != 4 {
        return Err(Error::InvalidParameter(format!("unsupported Strichartz exponent q = {q}")));
    }
    let times = g.times();
    let h = uniform_step(times)?;
    let m = times.len() - 1;
    let trap = |j: usize| if j == 0 || j == m { 0.5 * h } else { h };
    let gg = g_apply_all(g)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..=m {
        lhs += trap(j) * l4_norm(&gg.fields()[j]).powi(4);
        rhs += trap(j) * g.fields()[j].spectrum().sobolev_norm(-0.5);
    }
    Ok((lhs.powf(0.25), rhs))
}
