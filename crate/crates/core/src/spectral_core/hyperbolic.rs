//! Hyperbolic waves `t^{-m}·trig(n·ρ)`, `ρ = √(t² - |x|²)`, and the closed
//! form of `(□+1)` applied to them.
//!
//! With `⟨μ⟩ = t/ρ`:
//!
//! ```text
//! (□+1) t^{-m}cos(nρ) = (1-n²)t^{-m}cos(nρ) + 2n(m-1)t^{-m-1}⟨μ⟩sin(nρ) + m(m+1)t^{-m-2}cos(nρ)
//! (□+1) t^{-m}sin(nρ) = (1-n²)t^{-m}sin(nρ) - 2n(m-1)t^{-m-1}⟨μ⟩cos(nρ) + m(m+1)t^{-m-2}sin(nρ)
//! ```

use serde::Serialize;

use super::field::{dalembertian_plus_one, RealField};
use super::grid::Grid2D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    Cos,
    Sin,
}

/// One hyperbolic wave `t^{-m}·trig(n·ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicWave {
    pub m: i32,
    pub n: f64,
    pub trig: Trig,
}

impl HyperbolicWave {
    /// Value at `(t, x)`; requires `|x| < t`.
    pub fn eval(&self, t: f64, x: [f64; 2]) -> f64 {
        let rho = (t * t - x[0] * x[0] - x[1] * x[1]).sqrt();
        let (s, c) = (self.n * rho).sin_cos();
        t.powi(-self.m)
            * match self.trig {
                Trig::Cos => c,
                Trig::Sin => s,
            }
    }

    /// Closed form of `(□+1)` at `(t, x)`; requires `|x| < t`.
    pub fn box_plus_one(&self, t: f64, x: [f64; 2]) -> f64 {
        let rho = (t * t - x[0] * x[0] - x[1] * x[1]).sqrt();
        let bracket = t / rho;
        let (m, n) = (self.m as f64, self.n);
        let (s, c) = (n * rho).sin_cos();
        let (main, cross) = match self.trig {
            Trig::Cos => (c, s),
            Trig::Sin => (s, -c),
        };
        ((1.0 - n * n) * t.powi(-self.m) + m * (m + 1.0) * t.powi(-self.m - 2)) * main
            + 2.0 * n * (m - 1.0) * t.powi(-self.m - 1) * bracket * cross
    }

    /// The wave at time `t` times a smooth radial window equal to one for
    /// `|x| ≤ r_flat` and zero for `|x| ≥ r_zero`, with `r_zero < t`.
    pub fn sample_windowed(&self, t: f64, grid: Grid2D, r_flat: f64, r_zero: f64) -> RealField {
        RealField::from_fn(grid, |x, y| {
            let w = window((x * x + y * y).sqrt(), r_flat, r_zero);
            if w == 0.0 {
                0.0
            } else {
                w * self.eval(t, [x, y])
            }
        })
    }
}

/// `C^∞` step from one at `r ≤ a` to zero at `r ≥ b`.
fn window(r: f64, a: f64, b: f64) -> f64 {
    let bump = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let s = (r - a) / (b - a);
    let up = bump(1.0 - s);
    up / (up + bump(s))
}

/// Discrete `(□+1)` against the closed form at grid points with `|x| ≤ r_probe`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub t: f64,
    pub h_t: f64,
    pub max_abs_error: f64,
    pub max_abs_exact: f64,
}

impl IdentityCheck {
    /// Largest error over the largest exact value; sign changes of the
    /// exact value make a pointwise ratio meaningless.
    pub fn relative(&self) -> f64 {
        self.max_abs_error / self.max_abs_exact
    }
}

/// Applies [`dalembertian_plus_one`] to the windowed wave at `t ± h_t` and
/// compares with [`HyperbolicWave::box_plus_one`] inside `|x| ≤ 0.35t`.
///
/// The window is flat on `|x| ≤ 0.4t` and vanishes beyond `0.6t`, so the
/// spectral Laplacian is exact inside the probe disc up to resolution.
pub fn check_identity(wave: &HyperbolicWave, t: f64, h_t: f64, grid: Grid2D) -> Result<IdentityCheck> {
    if !(t > 1.0 && h_t > 0.0 && h_t < 0.1 * t) {
        return Err(Error::InvalidParameter(format!("need t > 1 and 0 < h_t < t/10, got t = {t}, h_t = {h_t}")));
    }
    if grid.length() < 1.4 * t {
        return Err(Error::InvalidGrid(format!("box {} does not contain the window of radius {}", grid.length(), 0.6 * t)));
    }
    let (r_flat, r_zero, r_probe) = (0.4 * t, 0.6 * t, 0.35 * t);
    let f = |s: f64| wave.sample_windowed(s, grid, r_flat, r_zero);
    let d = dalembertian_plus_one(&f(t - h_t), &f(t), &f(t + h_t), h_t)?;
    let n = grid.n();
    let (mut err, mut exact) = (0.0f64, 0.0f64);
    for i in 0..n {
        let x = grid.coord(i);
        for j in 0..n {
            let y = grid.coord(j);
            if x * x + y * y <= r_probe * r_probe {
                let e = wave.box_plus_one(t, [x, y]);
                err = err.max((d.data()[i * n + j] - e).abs());
                exact = exact.max(e.abs());
            }
        }
    }
    Ok(IdentityCheck { t, h_t, max_abs_error: err, max_abs_exact: exact })
}
